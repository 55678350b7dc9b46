//! Property tests over generated documents, poses and traces.

use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;

use offload_kernel::anchoring::{anchor_world_pose, classify_region, resolve_anchor, Pose, RegionId};
use offload_kernel::config::RegionConfig;
use offload_kernel::document::{DocumentSnapshot, LayoutRect, NodeId};
use offload_kernel::harness::{gen_dom, gen_offload_trace, gen_snapshot, parse_trace, Replayer};
use offload_kernel::protocol::Role;
use offload_kernel::selection::{expand_selection, rubberband, select_similar, Selection, SelectionKind};
use offload_kernel::session::{Audience, ClientMirror};
use offload_kernel::Config;

fn pose() -> impl Strategy<Value = Pose> {
    (prop::array::uniform3(-2.0f64..2.0), prop::array::uniform3(-3.2f64..3.2))
        .prop_map(|(p, r)| Pose::new(Vector3::from(p), UnitQuaternion::from_euler_angles(r[0], r[1], r[2])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_climbs_to_a_fixed_root(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let snap = gen_snapshot(seed, 80);
        let start = snap.nodes()[pick.index(snap.len())].id;
        let mut sel = Selection {
            doc_id: snap.doc_id().to_owned(),
            kind: SelectionKind::ElementSet,
            node_ids: vec![start],
            region_rect: None,
            seed: Some(start),
            expansion_chain: vec![start],
        };
        let mut current = start;
        for _ in 0..snap.depth(start).unwrap() {
            sel = expand_selection(&snap, &sel).unwrap();
            let next = sel.node_ids[0];
            prop_assert_eq!(snap.parent(current).unwrap(), Some(next));
            current = next;
        }
        prop_assert_eq!(current, snap.root());
        prop_assert_eq!(expand_selection(&snap, &sel).unwrap().node_ids, vec![snap.root()]);
    }

    #[test]
    fn rubberband_members_are_covered_and_unnested(
        seed in any::<u64>(),
        x in 0.0f64..800.0, y in 0.0f64..2000.0, w in 1.0f64..800.0, h in 1.0f64..1200.0,
        theta in 0.05f64..1.0,
    ) {
        let snap = gen_snapshot(seed, 80);
        let rect = LayoutRect::new(x, y, w, h);
        let sel = rubberband(&snap, rect, theta).unwrap();
        for &id in &sel.node_ids {
            let b = snap.node(id).unwrap().bbox;
            prop_assert!(b.area() > 0.0 && b.intersection_area(&rect) >= theta * b.area());
            for &other in &sel.node_ids {
                prop_assert!(other == id || !snap.is_ancestor(other, id).unwrap());
            }
        }
    }

    #[test]
    fn similar_selection_contains_its_seed(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let snap = gen_snapshot(seed, 80);
        let n = snap.nodes()[pick.index(snap.len())].id;
        let sel = select_similar(&snap, n).unwrap();
        prop_assert!(sel.node_ids.contains(&n));
        for &m in &sel.node_ids {
            prop_assert_eq!(snap.tag_path(m).unwrap(), snap.tag_path(n).unwrap());
            // Similarity is symmetric.
            prop_assert_eq!(&select_similar(&snap, m).unwrap().node_ids, &sel.node_ids);
        }
    }

    #[test]
    fn snapshot_round_trips_through_raw(seed in any::<u64>()) {
        let raw = gen_dom(seed, 120);
        let snap = DocumentSnapshot::ingest(raw.clone()).unwrap();
        prop_assert_eq!(DocumentSnapshot::ingest(snap.to_raw()).unwrap().to_raw(), snap.to_raw());
        prop_assert!(snap.len() <= 120);
        prop_assert!(snap.contains(NodeId(raw.nodes[0].id)));
    }

    #[test]
    fn view_wins_when_both_regions_claim_the_hand(head in pose(), along in 0.0f64..0.3) {
        let cfg = RegionConfig::default();
        let phone = Pose::new(head.position + head.forward() * 0.2, head.orientation);
        let hand = head.position + head.forward() * along;
        prop_assert_eq!(classify_region(&hand, &phone, &head, &cfg).unwrap(), RegionId::FoV);
    }

    #[test]
    fn release_round_trips_in_frame(phone in pose(), head in pose(), p in prop::array::uniform3(-2.0f64..2.0)) {
        let p = Vector3::from(p);
        for region in [RegionId::Phone, RegionId::FoV] {
            let a = resolve_anchor(&p, region, &phone, &head, &[], 0.1, 0.0).unwrap();
            prop_assert!((anchor_world_pose(&a, &phone, &head).position - p).norm() <= 1e-9);
        }
    }

    #[test]
    fn late_joiner_matches_full_stream(seed in 0u64..10_000, cut in any::<prop::sample::Index>()) {
        let config = Config::default();
        let trace = gen_offload_trace(seed, &config);
        let records = parse_trace(&trace.text).unwrap();
        let join_at = cut.index(records.len());
        let mut r = Replayer::new(config);
        let mut full = ClientMirror::default();
        let mut late = ClientMirror::default();
        for (i, (_, rec)) in records.iter().enumerate() {
            if i == join_at {
                let (_, out) = r.rejoin(Role::Ar, rec.t);
                out.iter().for_each(|o| late.apply(&o.envelope));
            }
            for o in r.step(rec) {
                let to_ar = match o.audience {
                    Audience::All => true,
                    Audience::Role(role) => role == Role::Ar,
                    Audience::Client(c) => r.kernel().role_of(c) == Some(Role::Ar),
                };
                if to_ar {
                    full.apply(&o.envelope);
                    if i >= join_at {
                        late.apply(&o.envelope);
                    }
                }
            }
        }
        prop_assert_eq!(late.state_hash(), full.state_hash());
    }
}
