//! Offloading kernel: element selection over a phone page's DOM snapshot,
//! the offloading quasimode gesture recognizer, three-region spatial
//! anchoring, and the authoritative phone/AR session state machine.
//!
//! The kernel is pure and deterministic: all timing comes from sample
//! timestamps, so a recorded trace replays to a byte-identical log.

pub mod anchoring;
pub mod config;
pub mod document;
pub mod gesture;
pub mod harness;
pub mod protocol;
pub mod selection;
pub mod session;

pub use config::Config;
