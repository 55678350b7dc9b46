use std::collections::BTreeMap;

use offload_kernel::harness::{gen_offload_trace, replay, DecisionLog};
use offload_kernel::protocol::{ErrorCode, ServerBody};
use offload_kernel::Config;

struct Tally {
    commits: usize,
    missing: usize,
    violations: Vec<String>,
}

fn audit(log: &DecisionLog) -> Tally {
    let mut uploaded: BTreeMap<String, u64> = BTreeMap::new();
    let mut t = Tally {
        commits: 0,
        missing: 0,
        violations: Vec::new(),
    };
    for e in &log.entries {
        match &e.envelope.body {
            ServerBody::SnapshotImageMeta(m) => {
                uploaded.entry(m.selection_hash.clone()).or_insert(e.envelope.seq);
            }
            ServerBody::OffloadCommit { selection_hash, .. } => {
                t.commits += 1;
                match uploaded.get(selection_hash) {
                    Some(&s) if s < e.envelope.seq => {}
                    _ => t
                        .violations
                        .push(format!("commit seq {} without prior image", e.envelope.seq)),
                }
            }
            ServerBody::Error(err) if err.code == ErrorCode::MissingImage => t.missing += 1,
            _ => {}
        }
    }
    t
}

#[test]
fn commits_follow_their_images() {
    let config = Config::default();
    for seed in 0..200 {
        let trace = gen_offload_trace(seed, &config);
        let log = replay(&trace.text, &config).unwrap();
        let t = audit(&log);
        assert!(t.violations.is_empty(), "seed {seed}: {:?}", t.violations);
        assert_eq!(t.commits, trace.with_image, "seed {seed}");
        assert_eq!(t.missing, trace.without_image, "seed {seed}");
    }
}
