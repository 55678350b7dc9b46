//! Deterministic test surface: trace replay, random documents, brute-force
//! oracles and decision-log diffs.

pub mod diff;
pub mod gen;
pub mod offload_trace;
pub mod oracle;
pub mod replay;
pub mod trace;

pub use diff::{diff_logs, LogDiff};
pub use gen::{gen_dom, gen_snapshot};
pub use offload_trace::{gen_offload_trace, OffloadTrace};
pub use oracle::{expansion_check, oracle_check, ExpansionReport, OracleReport};
pub use replay::{replay, DecisionLog, LogEntry, Replayer};
pub use trace::{parse_trace, TraceError, TraceRecord, TraceSource};
