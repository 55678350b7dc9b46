#![no_main]

use libfuzzer_sys::fuzz_target;
use offload_kernel::document::{ingest_snapshot_json, Point};

fuzz_target!(|data: &[u8]| {
    if let Ok(snap) = ingest_snapshot_json(data) {
        // Accepted snapshots must answer queries without panicking.
        let root = snap.root();
        let _ = snap.first_block_ancestor(root);
        let _ = snap.node_at_point(Point::new(snap.viewport_w() / 2.0, 10.0));
    }
});
