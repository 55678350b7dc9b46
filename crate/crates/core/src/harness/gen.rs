//! Seeded random documents for property tests and the oracle sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::document::{DocumentSnapshot, LayoutRect, RawNode, RawSnapshot, RawViewport};

const VIEWPORT_W: f64 = 800.0;
const VIEWPORT_H: f64 = 640.0;
const TAGS: [(&str, bool); 8] = [
    ("div", true),
    ("section", true),
    ("p", true),
    ("h2", true),
    ("li", true),
    ("span", false),
    ("a", false),
    ("img", false),
];
const CLASSES: [&str; 3] = ["a", "b", "c"];

/// A random valid snapshot with between 1 and `max_nodes` nodes.
///
/// Boxes have integer coordinates and positive size. Most children sit
/// inside their parent; about one in ten overflows it. Inline elements
/// only ever contain inline elements.
pub fn gen_dom(seed: u64, max_nodes: usize) -> RawSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_nodes = max_nodes.max(1);
    let count = rng.random_range(1..=max_nodes);
    let page_height = rng.random_range(VIEWPORT_H as u32..=4000) as f64;

    let mut nodes = vec![RawNode {
        id: 0,
        tag: "html".into(),
        classes: Default::default(),
        parent: None,
        children: Vec::new(),
        is_block: Some(true),
        bbox: LayoutRect::new(0.0, 0.0, VIEWPORT_W, page_height),
        text_digest: None,
    }];
    for id in 1..count {
        let parent = rng.random_range(0..nodes.len());
        let pb = nodes[parent].bbox;
        let (tag, block) = if nodes[parent].is_block == Some(false) {
            TAGS[rng.random_range(5..TAGS.len())]
        } else {
            TAGS[rng.random_range(0..TAGS.len())]
        };
        let pw = pb.w as u32;
        let ph = pb.h as u32;
        let x = rng.random_range(0..pw.max(1));
        let y = rng.random_range(0..ph.max(1));
        let mut w = rng.random_range(1..=(pw - x).max(1));
        let mut h = rng.random_range(1..=(ph - y).max(1));
        if rng.random_bool(0.1) {
            w += rng.random_range(1..=60);
            h += rng.random_range(1..=60);
        }
        let classes = CLASSES
            .iter()
            .filter(|_| rng.random_bool(0.3))
            .map(|c| c.to_string())
            .collect();
        nodes.push(RawNode {
            id: id as u64,
            tag: tag.into(),
            classes,
            parent: Some(parent as u64),
            children: Vec::new(),
            is_block: Some(block),
            bbox: LayoutRect::new(pb.x + x as f64, pb.y + y as f64, w as f64, h as f64),
            text_digest: None,
        });
        nodes[parent].children.push(id as u64);
    }
    RawSnapshot {
        doc_id: format!("gen-{seed}"),
        url: format!("https://gen.test/{seed}"),
        viewport: RawViewport {
            w: VIEWPORT_W,
            h: VIEWPORT_H,
        },
        page_height,
        nodes,
    }
}

/// [`gen_dom`], ingested.
pub fn gen_snapshot(seed: u64, max_nodes: usize) -> DocumentSnapshot {
    DocumentSnapshot::ingest(gen_dom(seed, max_nodes)).expect("generated documents are valid")
}
