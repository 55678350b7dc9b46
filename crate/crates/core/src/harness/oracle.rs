//! Brute-force reference scans compared against the indexed kernel.
//!
//! The reference side works on the raw node list only: parents, depths and
//! document order are recomputed here by plain walks, and every query is a
//! full scan.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::gen::gen_dom;
use crate::document::{DocumentSnapshot, LayoutRect, NodeId, Point, RawSnapshot};
use crate::selection::{expand_selection, rubberband, select_similar, Selection, SelectionKind};

/// Node cap for generated documents.
pub const ORACLE_MAX_NODES: usize = 200;

struct Reference<'a> {
    raw: &'a RawSnapshot,
    index: HashMap<u64, usize>,
    order: HashMap<u64, usize>,
}

impl<'a> Reference<'a> {
    fn new(raw: &'a RawSnapshot) -> Self {
        let index: HashMap<u64, usize> = raw.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let root = raw.nodes.iter().find(|n| n.parent.is_none()).expect("root").id;
        let mut order = HashMap::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            order.insert(id, order.len());
            stack.extend(raw.nodes[index[&id]].children.iter().rev());
        }
        Self { raw, index, order }
    }

    fn node(&self, id: u64) -> &crate::document::RawNode {
        &self.raw.nodes[self.index[&id]]
    }

    fn depth(&self, id: u64) -> usize {
        let mut d = 0;
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.node(p).parent;
        }
        d
    }

    fn is_ancestor(&self, anc: u64, id: u64) -> bool {
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            if p == anc {
                return true;
            }
            cur = self.node(p).parent;
        }
        false
    }

    fn by_order(&self, mut ids: Vec<u64>) -> Vec<NodeId> {
        ids.sort_by_key(|id| self.order[id]);
        ids.into_iter().map(NodeId).collect()
    }

    fn node_at_point(&self, p: Point) -> Option<NodeId> {
        let mut best: Option<(usize, usize, u64)> = None;
        for n in &self.raw.nodes {
            let b = n.bbox;
            if b.x <= p.x && p.x <= b.x + b.w && b.y <= p.y && p.y <= b.y + b.h {
                let key = (self.depth(n.id), self.order[&n.id], n.id);
                if best.is_none_or(|k| (key.0, key.1) > (k.0, k.1)) {
                    best = Some(key);
                }
            }
        }
        best.filter(|k| k.0 > 0).map(|k| NodeId(k.2))
    }

    fn first_block_ancestor(&self, id: u64) -> NodeId {
        let mut cur = id;
        loop {
            let n = self.node(cur);
            if n.is_block != Some(false) {
                return NodeId(cur);
            }
            match n.parent {
                Some(p) => cur = p,
                None => return NodeId(cur),
            }
        }
    }

    fn path(&self, id: u64) -> Vec<&str> {
        let mut out = vec![self.node(id).tag.as_str()];
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            out.push(self.node(p).tag.as_str());
            cur = self.node(p).parent;
        }
        out
    }

    fn class_set(&self, id: u64) -> Vec<&str> {
        let mut c: Vec<&str> = self.node(id).classes.iter().map(String::as_str).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    fn select_similar(&self, id: u64) -> Vec<NodeId> {
        let (path, classes) = (self.path(id), self.class_set(id));
        let hits = self
            .raw
            .nodes
            .iter()
            .filter(|n| self.path(n.id) == path && self.class_set(n.id) == classes)
            .map(|n| n.id)
            .collect();
        self.by_order(hits)
    }

    fn rubberband(&self, rect: LayoutRect, theta: f64) -> Vec<NodeId> {
        let captured: Vec<u64> = self
            .raw
            .nodes
            .iter()
            .filter(|n| {
                let b = n.bbox;
                let ix = (b.x + b.w).min(rect.x + rect.w) - b.x.max(rect.x);
                let iy = (b.y + b.h).min(rect.y + rect.h) - b.y.max(rect.y);
                let inter = if ix > 0.0 && iy > 0.0 { ix * iy } else { 0.0 };
                let area = b.w * b.h;
                area > 0.0 && inter >= theta * area
            })
            .map(|n| n.id)
            .collect();
        let top = captured
            .iter()
            .copied()
            .filter(|&n| !captured.iter().any(|&m| self.is_ancestor(m, n)))
            .collect();
        self.by_order(top)
    }
}

/// First disagreement between kernel and reference, with everything
/// needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub dom_seed: u64,
    pub max_nodes: usize,
    pub query: String,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "divergence on gen-dom --seed {} --max-nodes {}",
            self.dom_seed, self.max_nodes
        )?;
        writeln!(f, "  query:    {}", self.query)?;
        writeln!(f, "  expected: {}", self.expected)?;
        write!(f, "  actual:   {}", self.actual)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OracleReport {
    pub documents: usize,
    pub checks: u64,
    pub divergence: Option<Divergence>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.divergence {
            None => write!(
                f,
                "PASS: {} documents, {} checks, 0 divergences",
                self.documents, self.checks
            ),
            Some(d) => write!(
                f,
                "FAIL after {} documents, {} checks\n{d}",
                self.documents, self.checks
            ),
        }
    }
}

/// Seed of the `i`-th document in a sweep starting at `seed`.
pub fn dom_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

fn ids(v: &[NodeId]) -> String {
    format!("{:?}", v.iter().map(|n| n.0).collect::<Vec<_>>())
}

/// Compare kernel and reference on `count` generated documents. Both use
/// rubberband threshold `theta`.
pub fn oracle_check(count: usize, seed: u64, theta: f64) -> OracleReport {
    oracle_check_with(count, seed, theta, theta)
}

/// As [`oracle_check`], but the kernel runs with `kernel_theta` while the
/// reference keeps `theta`. Used to show a misconfigured kernel is caught.
pub fn oracle_check_with(count: usize, seed: u64, theta: f64, kernel_theta: f64) -> OracleReport {
    let mut report = OracleReport::default();
    for i in 0..count {
        let dseed = dom_seed(seed, i);
        report.documents += 1;
        if let Err(d) = check_document(dseed, theta, kernel_theta, &mut report.checks) {
            report.divergence = Some(d);
            break;
        }
    }
    report
}

fn check_document(dseed: u64, theta: f64, kernel_theta: f64, checks: &mut u64) -> Result<(), Divergence> {
    let raw = gen_dom(dseed, ORACLE_MAX_NODES);
    let snap = DocumentSnapshot::ingest(raw.clone()).map_err(|e| Divergence {
        dom_seed: dseed,
        max_nodes: ORACLE_MAX_NODES,
        query: "ingest".into(),
        expected: "valid snapshot".into(),
        actual: e.to_string(),
    })?;
    let reference = Reference::new(&raw);
    let mut rng = ChaCha8Rng::seed_from_u64(dseed ^ 0x5eed);
    let diverge = |query: String, expected: String, actual: String| Divergence {
        dom_seed: dseed,
        max_nodes: ORACLE_MAX_NODES,
        query,
        expected,
        actual,
    };
    let page_h = raw.page_height as i64;
    let pick = |rng: &mut ChaCha8Rng| &raw.nodes[rng.random_range(0..raw.nodes.len())];

    let mut points: Vec<Point> = (0..24)
        .map(|_| {
            Point::new(
                rng.random_range(-10..=810) as f64,
                rng.random_range(-10..=page_h + 10) as f64,
            )
        })
        .collect();
    for _ in 0..8 {
        let b = pick(&mut rng).bbox;
        points.push(Point::new(b.x, b.y));
        points.push(Point::new(b.right(), b.bottom()));
    }
    for p in points {
        *checks += 1;
        let (want, got) = (reference.node_at_point(p), snap.node_at_point(p));
        if want != got {
            return Err(diverge(
                format!("node_at_point({}, {})", p.x, p.y),
                format!("{want:?}"),
                format!("{got:?}"),
            ));
        }
    }

    for n in &raw.nodes {
        *checks += 1;
        let want = reference.first_block_ancestor(n.id);
        let got = snap.first_block_ancestor(NodeId(n.id)).map_err(|e| {
            diverge(
                format!("first_block_ancestor({})", n.id),
                format!("{want:?}"),
                e.to_string(),
            )
        })?;
        if want != got {
            return Err(diverge(
                format!("first_block_ancestor({})", n.id),
                format!("{want:?}"),
                format!("{got:?}"),
            ));
        }
    }

    for _ in 0..16 {
        let id = pick(&mut rng).id;
        *checks += 1;
        let want = reference.select_similar(id);
        let got = select_similar(&snap, NodeId(id)).map(|s| s.node_ids);
        if got.as_ref() != Ok(&want) {
            return Err(diverge(format!("select_similar({id})"), ids(&want), format!("{got:?}")));
        }
    }

    let mut rects: Vec<LayoutRect> = (0..12)
        .map(|_| {
            let x = rng.random_range(-20..800);
            let y = rng.random_range(-20..page_h);
            let w = rng.random_range(1..=400);
            let h = rng.random_range(1..=600);
            LayoutRect::new(x as f64, y as f64, w as f64, h as f64)
        })
        .collect();
    // Rects covering just under and exactly half of a node.
    for _ in 0..6 {
        let b = pick(&mut rng).bbox;
        if b.w >= 4.0 {
            rects.push(LayoutRect::new(b.x, b.y, (b.w * 0.45).floor(), b.h));
            rects.push(LayoutRect::new(b.x, b.y, b.w / 2.0, b.h));
        }
    }
    for rect in rects {
        *checks += 1;
        let want = reference.rubberband(rect, theta);
        let got = rubberband(&snap, rect, kernel_theta).map(|s| s.node_ids);
        if got.as_ref() != Ok(&want) {
            return Err(diverge(
                format!(
                    "rubberband(x={}, y={}, w={}, h={}, theta={theta})",
                    rect.x, rect.y, rect.w, rect.h
                ),
                ids(&want),
                match got {
                    Ok(v) => ids(&v),
                    Err(e) => e.to_string(),
                },
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub pairs: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

/// Iterate parent expansion from `count` random (document, node) pairs and
/// check each step moves to the parent, the root is reached within depth
/// steps, and the root is a fixed point.
pub fn expansion_check(count: usize, seed: u64) -> ExpansionReport {
    let mut report = ExpansionReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current: Option<(u64, RawSnapshot, DocumentSnapshot)> = None;
    for i in 0..count {
        if i % 10 == 0 {
            let dseed = dom_seed(seed, i / 10);
            let raw = gen_dom(dseed, ORACLE_MAX_NODES);
            let snap = DocumentSnapshot::ingest(raw.clone()).expect("generated documents are valid");
            current = Some((dseed, raw, snap));
        }
        let (dseed, raw, snap) = current.as_ref().expect("set above");
        let reference = Reference::new(raw);
        let start = raw.nodes[rng.random_range(0..raw.nodes.len())].id;
        report.pairs += 1;
        if let Err(why) = check_chain(&reference, snap, start) {
            report.failures += 1;
            report.first_failure.get_or_insert_with(|| {
                format!("gen-dom --seed {dseed} --max-nodes {ORACLE_MAX_NODES}, node {start}: {why}")
            });
        }
    }
    report
}

fn check_chain(reference: &Reference, snap: &DocumentSnapshot, start: u64) -> Result<(), String> {
    let depth = reference.depth(start);
    let mut sel = Selection {
        doc_id: snap.doc_id().to_owned(),
        kind: SelectionKind::ElementSet,
        node_ids: vec![NodeId(start)],
        region_rect: None,
        seed: Some(NodeId(start)),
        expansion_chain: vec![NodeId(start)],
    };
    let mut cur = start;
    let mut steps = 0;
    while let Some(parent) = reference.node(cur).parent {
        let next = expand_selection(snap, &sel).map_err(|e| e.to_string())?;
        steps += 1;
        if next.node_ids != vec![NodeId(parent)] {
            return Err(format!(
                "step {steps}: expected [{parent}], got {}",
                ids(&next.node_ids)
            ));
        }
        if !reference.is_ancestor(parent, start) {
            return Err(format!("step {steps}: {parent} is not an ancestor"));
        }
        cur = parent;
        sel = next;
    }
    if steps > depth {
        return Err(format!("{steps} steps for depth {depth}"));
    }
    let again = expand_selection(snap, &sel).map_err(|e| e.to_string())?;
    if again != sel {
        return Err("root is not a fixed point".into());
    }
    Ok(())
}
