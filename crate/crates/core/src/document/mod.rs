//! Device-independent document model: the DOM tree the phone ships over,
//! its layout geometry, and the tree/geometry queries selection builds on.
//!
//! All coordinates are document-space page pixels with y growing downward.
//! A snapshot is immutable once ingested.

mod index;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use self::index::BandIndex;

/// Node identifier, unique within one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Axis-aligned box in document space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutRect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl LayoutRect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    /// Closed-box containment: points on the edge are inside.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x <= self.right() && p.y >= self.y && p.y <= self.bottom()
    }

    pub fn intersection_area(&self, other: &LayoutRect) -> f64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Smallest rect spanning two corner points, in any order.
    pub fn from_corners(a: Point, b: Point) -> Self {
        let x = a.x.min(b.x);
        let y = a.y.min(b.y);
        Self::new(x, y, (a.x - b.x).abs(), (a.y - b.y).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomNode {
    pub id: NodeId,
    pub tag: String,
    pub classes: BTreeSet<String>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub is_block: bool,
    pub bbox: LayoutRect,
    pub text_digest: Option<String>,
}

/// Wire form of a snapshot. Field names are part of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSnapshot {
    pub doc_id: String,
    pub url: String,
    pub viewport: RawViewport,
    pub page_height: f64,
    pub nodes: Vec<RawNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawViewport {
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawNode {
    pub id: u64,
    pub tag: String,
    pub classes: Vec<String>,
    pub parent: Option<u64>,
    pub children: Vec<u64>,
    /// May be omitted only on the root, which is block-level regardless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_block: Option<bool>,
    #[serde(rename = "box")]
    pub bbox: LayoutRect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnapshotError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("invalid viewport: {0}")]
    Viewport(String),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("node {0}: empty tag")]
    EmptyTag(NodeId),
    #[error("node {0}: missing is_block flag")]
    MissingBlockFlag(NodeId),
    #[error("node {0}: negative extent")]
    NegativeExtent(NodeId),
    #[error("node {0}: non-finite box")]
    NonFiniteBox(NodeId),
    #[error("node {node}: dangling reference to {target}")]
    Dangling { node: NodeId, target: NodeId },
    #[error("node {node}: inconsistent link with {other}")]
    InconsistentLink { node: NodeId, other: NodeId },
    #[error("snapshot has no root node")]
    NoRoot,
    #[error("snapshot has more than one root ({0} and {1})")]
    MultipleRoots(NodeId, NodeId),
    #[error("node {0}: cycle detected")]
    Cycle(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// A validated, immutable document snapshot.
#[derive(Debug, Clone)]
pub struct DocumentSnapshot {
    doc_id: String,
    url: String,
    viewport_w: f64,
    viewport_h: f64,
    page_height: f64,
    /// Nodes in document pre-order; position is the document order index.
    nodes: Vec<DomNode>,
    positions: HashMap<NodeId, usize>,
    parents: Vec<Option<usize>>,
    depths: Vec<u32>,
    spatial: BandIndex,
}

/// Scroll position of the phone page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrollState {
    pub doc_id: String,
    pub scroll_y: f64,
}

/// Parse and validate a snapshot document.
pub fn ingest_snapshot_json(bytes: &[u8]) -> Result<DocumentSnapshot, SnapshotError> {
    let raw: RawSnapshot = serde_json::from_slice(bytes).map_err(|e| SnapshotError::Schema(e.to_string()))?;
    DocumentSnapshot::ingest(raw)
}

impl DocumentSnapshot {
    /// Validate a raw snapshot. Either every invariant holds or nothing is built.
    pub fn ingest(raw: RawSnapshot) -> Result<Self, SnapshotError> {
        let RawViewport { w: vw, h: vh } = raw.viewport;
        if !(vw.is_finite() && vh.is_finite() && vw > 0.0 && vh > 0.0) {
            return Err(SnapshotError::Viewport(format!("viewport {vw}x{vh} must be positive")));
        }
        if !raw.page_height.is_finite() || raw.page_height < vh {
            return Err(SnapshotError::Viewport(format!(
                "page_height {} is smaller than viewport height {vh}",
                raw.page_height
            )));
        }

        let mut by_id: HashMap<u64, usize> = HashMap::with_capacity(raw.nodes.len());
        for (i, n) in raw.nodes.iter().enumerate() {
            if by_id.insert(n.id, i).is_some() {
                return Err(SnapshotError::DuplicateId(NodeId(n.id)));
            }
        }

        let mut root = None;
        for n in &raw.nodes {
            let id = NodeId(n.id);
            if n.tag.trim().is_empty() {
                return Err(SnapshotError::EmptyTag(id));
            }
            if !n.bbox.is_finite() {
                return Err(SnapshotError::NonFiniteBox(id));
            }
            if n.bbox.w < 0.0 || n.bbox.h < 0.0 {
                return Err(SnapshotError::NegativeExtent(id));
            }
            match n.parent {
                None => {
                    if let Some(prev) = root {
                        return Err(SnapshotError::MultipleRoots(NodeId(prev), id));
                    }
                    root = Some(n.id);
                }
                Some(p) => {
                    if n.is_block.is_none() {
                        return Err(SnapshotError::MissingBlockFlag(id));
                    }
                    let parent = by_id.get(&p).map(|&i| &raw.nodes[i]).ok_or(SnapshotError::Dangling {
                        node: id,
                        target: NodeId(p),
                    })?;
                    if !parent.children.contains(&n.id) {
                        return Err(SnapshotError::InconsistentLink {
                            node: id,
                            other: NodeId(p),
                        });
                    }
                }
            }
            let mut seen = BTreeSet::new();
            for &c in &n.children {
                let child = by_id.get(&c).map(|&i| &raw.nodes[i]).ok_or(SnapshotError::Dangling {
                    node: id,
                    target: NodeId(c),
                })?;
                if child.parent != Some(n.id) || !seen.insert(c) {
                    return Err(SnapshotError::InconsistentLink {
                        node: id,
                        other: NodeId(c),
                    });
                }
            }
        }
        let root = root.ok_or(SnapshotError::NoRoot)?;

        // Pre-order walk from the root. With consistent links, anything
        // left unvisited sits on a parent cycle.
        let mut order: Vec<usize> = Vec::with_capacity(raw.nodes.len());
        let mut depth_of: Vec<u32> = vec![0; raw.nodes.len()];
        let mut visited = vec![false; raw.nodes.len()];
        let mut stack = vec![(by_id[&root], 0u32)];
        while let Some((i, d)) = stack.pop() {
            if visited[i] {
                return Err(SnapshotError::Cycle(NodeId(raw.nodes[i].id)));
            }
            visited[i] = true;
            depth_of[i] = d;
            order.push(i);
            for c in raw.nodes[i].children.iter().rev() {
                stack.push((by_id[c], d + 1));
            }
        }
        if let Some(i) = visited.iter().position(|v| !v) {
            return Err(SnapshotError::Cycle(NodeId(raw.nodes[i].id)));
        }

        let mut position_of = vec![0usize; raw.nodes.len()];
        for (pos, &i) in order.iter().enumerate() {
            position_of[i] = pos;
        }
        let mut raw_nodes: Vec<Option<RawNode>> = raw.nodes.into_iter().map(Some).collect();
        let mut nodes = Vec::with_capacity(order.len());
        let mut parents = Vec::with_capacity(order.len());
        let mut depths = Vec::with_capacity(order.len());
        let mut positions = HashMap::with_capacity(order.len());
        for (pos, &i) in order.iter().enumerate() {
            let n = raw_nodes[i].take().expect("each node visited once");
            let id = NodeId(n.id);
            positions.insert(id, pos);
            parents.push(n.parent.map(|p| position_of[by_id[&p]]));
            depths.push(depth_of[i]);
            nodes.push(DomNode {
                id,
                tag: n.tag.trim().to_ascii_lowercase(),
                classes: n.classes.into_iter().filter(|c| !c.is_empty()).collect(),
                parent: n.parent.map(NodeId),
                children: n.children.into_iter().map(NodeId).collect(),
                is_block: n.parent.is_none() || n.is_block.unwrap_or(true),
                bbox: n.bbox,
                text_digest: n.text_digest,
            });
        }
        let spatial = BandIndex::build(nodes.iter().map(|n| n.bbox));

        Ok(Self {
            doc_id: raw.doc_id,
            url: raw.url,
            viewport_w: vw,
            viewport_h: vh,
            page_height: raw.page_height,
            nodes,
            positions,
            parents,
            depths,
            spatial,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn viewport_w(&self) -> f64 {
        self.viewport_w
    }

    pub fn viewport_h(&self) -> f64 {
        self.viewport_h
    }

    pub fn page_height(&self) -> f64 {
        self.page_height
    }

    pub fn root(&self) -> NodeId {
        self.nodes[0].id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in document order.
    pub fn nodes(&self) -> &[DomNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&DomNode, QueryError> {
        self.position(id).map(|p| &self.nodes[p])
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.positions.contains_key(&id)
    }

    fn position(&self, id: NodeId) -> Result<usize, QueryError> {
        self.positions.get(&id).copied().ok_or(QueryError::UnknownNode(id))
    }

    pub fn depth(&self, id: NodeId) -> Result<u32, QueryError> {
        self.position(id).map(|p| self.depths[p])
    }

    /// Pre-order position, root = 0.
    pub fn document_order_index(&self, id: NodeId) -> Result<usize, QueryError> {
        self.position(id)
    }

    pub fn parent(&self, id: NodeId) -> Result<Option<NodeId>, QueryError> {
        self.node(id).map(|n| n.parent)
    }

    /// Whether `ancestor` is a strict ancestor of `id`.
    pub fn is_ancestor(&self, ancestor: NodeId, id: NodeId) -> Result<bool, QueryError> {
        let target = self.position(ancestor)?;
        let mut cur = self.parents[self.position(id)?];
        while let Some(p) = cur {
            if p == target {
                return Ok(true);
            }
            cur = self.parents[p];
        }
        Ok(false)
    }

    /// Deepest node whose box contains `p`; later document order breaks
    /// ties. Returns `None` when nothing but the root is hit.
    pub fn node_at_point(&self, p: Point) -> Option<NodeId> {
        let best = self
            .spatial
            .candidates_at(p.y)
            .filter(|&pos| self.nodes[pos].bbox.contains(p))
            .max_by_key(|&pos| (self.depths[pos], pos))?;
        (best != 0).then(|| self.nodes[best].id)
    }

    /// Document positions of nodes whose boxes overlap `rect` with
    /// positive area, ascending.
    pub(crate) fn overlapping(&self, rect: &LayoutRect) -> Vec<usize> {
        let mut hits: Vec<usize> = self
            .spatial
            .candidates_in(rect.y, rect.bottom())
            .into_iter()
            .filter(|&pos| self.nodes[pos].bbox.intersection_area(rect) > 0.0)
            .collect();
        hits.sort_unstable();
        hits
    }

    pub(crate) fn position_parent(&self, pos: usize) -> Option<usize> {
        self.parents[pos]
    }

    pub(crate) fn position_of(&self, id: NodeId) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn first_block_ancestor(&self, id: NodeId) -> Result<NodeId, QueryError> {
        let mut pos = self.position(id)?;
        loop {
            if self.nodes[pos].is_block {
                return Ok(self.nodes[pos].id);
            }
            match self.parents[pos] {
                Some(p) => pos = p,
                None => return Ok(self.nodes[pos].id),
            }
        }
    }

    /// Tag names from the root down to `id`, inclusive.
    pub fn tag_path(&self, id: NodeId) -> Result<Vec<&str>, QueryError> {
        let mut path = Vec::with_capacity(self.depth(id)? as usize + 1);
        let mut cur = Some(self.position(id)?);
        while let Some(pos) = cur {
            path.push(self.nodes[pos].tag.as_str());
            cur = self.parents[pos];
        }
        path.reverse();
        Ok(path)
    }

    /// Clamp a scroll offset into `[0, page_height - viewport_h]`.
    pub fn clamp_scroll(&self, scroll_y: f64) -> f64 {
        let max = self.page_height - self.viewport_h;
        if scroll_y.is_nan() {
            return 0.0;
        }
        scroll_y.clamp(0.0, max)
    }

    /// Serialize back to the wire form. Nodes come out in document order.
    pub fn to_raw(&self) -> RawSnapshot {
        RawSnapshot {
            doc_id: self.doc_id.clone(),
            url: self.url.clone(),
            viewport: RawViewport {
                w: self.viewport_w,
                h: self.viewport_h,
            },
            page_height: self.page_height,
            nodes: self
                .nodes
                .iter()
                .map(|n| RawNode {
                    id: n.id.0,
                    tag: n.tag.clone(),
                    classes: n.classes.iter().cloned().collect(),
                    parent: n.parent.map(|p| p.0),
                    children: n.children.iter().map(|c| c.0).collect(),
                    is_block: Some(n.is_block),
                    bbox: n.bbox,
                    text_digest: n.text_digest.clone(),
                })
                .collect(),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    /// Independent hit-test oracle: scan everything, keep max (depth, order).
    fn brute_node_at_point(snap: &DocumentSnapshot, p: Point) -> Option<NodeId> {
        let mut best: Option<(u32, usize, NodeId)> = None;
        for (order, n) in snap.nodes().iter().enumerate() {
            let inside = p.x >= n.bbox.x && p.x <= n.bbox.x + n.bbox.w && p.y >= n.bbox.y && p.y <= n.bbox.y + n.bbox.h;
            if !inside {
                continue;
            }
            let mut depth = 0;
            let mut cur = n.parent;
            while let Some(c) = cur {
                depth += 1;
                cur = snap.node(c).unwrap().parent;
            }
            if best.is_none_or(|(d, o, _)| (depth, order) > (d, o)) {
                best = Some((depth, order, n.id));
            }
        }
        best.filter(|b| b.2 != snap.root()).map(|b| b.2)
    }

    #[test]
    fn ingest_reference_document() {
        let d = d1();
        assert_eq!(d.len(), 9);
        assert_eq!(d.root(), HTML);
        assert_eq!(d.node(HTML).unwrap().tag, "html");
    }

    #[test]
    fn ingest_rejects_inconsistent_link() {
        let mut raw = d1_raw();
        raw.nodes[2].children = vec![3];
        let err = DocumentSnapshot::ingest(raw).unwrap_err();
        assert_eq!(err, SnapshotError::InconsistentLink { node: P1, other: DIV_A });
        assert!(err.to_string().contains("inconsistent link"));
    }

    #[test]
    fn ingest_rejects_negative_extent() {
        let mut raw = d1_raw();
        raw.nodes[7].bbox.w = -5.0;
        let err = DocumentSnapshot::ingest(raw).unwrap_err();
        assert_eq!(err, SnapshotError::NegativeExtent(H2_B));
        assert!(err.to_string().contains("negative extent"));
    }

    #[test]
    fn ingest_rejects_dangling_and_cycles() {
        let mut raw = d1_raw();
        raw.nodes[8].children = vec![42];
        assert!(matches!(
            DocumentSnapshot::ingest(raw).unwrap_err(),
            SnapshotError::Dangling { target: NodeId(42), .. }
        ));

        // Two nodes pointing at each other, detached from the root.
        let mut raw = d1_raw();
        raw.nodes.push(RawNode {
            id: 20,
            tag: "div".into(),
            classes: vec![],
            parent: Some(21),
            children: vec![21],
            is_block: Some(true),
            bbox: LayoutRect::new(0.0, 0.0, 1.0, 1.0),
            text_digest: None,
        });
        raw.nodes.push(RawNode {
            id: 21,
            parent: Some(20),
            children: vec![20],
            ..raw.nodes[9].clone()
        });
        assert!(matches!(
            DocumentSnapshot::ingest(raw).unwrap_err(),
            SnapshotError::Cycle(_)
        ));
    }

    #[test]
    fn ingest_rejects_schema_and_roots() {
        assert!(matches!(
            ingest_snapshot_json(br#"{"doc_id":"x"}"#).unwrap_err(),
            SnapshotError::Schema(_)
        ));
        let mut raw = d1_raw();
        raw.nodes[1].parent = None;
        raw.nodes[0].children.clear();
        assert!(matches!(
            DocumentSnapshot::ingest(raw).unwrap_err(),
            SnapshotError::MultipleRoots(..)
        ));
        let mut raw = d1_raw();
        raw.page_height = 100.0;
        assert!(matches!(
            DocumentSnapshot::ingest(raw).unwrap_err(),
            SnapshotError::Viewport(_)
        ));
    }

    #[test]
    fn root_is_block_without_flag() {
        let mut raw = d1_raw();
        raw.nodes[0].is_block = None;
        let d = DocumentSnapshot::ingest(raw).unwrap();
        assert!(d.node(HTML).unwrap().is_block);
    }

    #[test]
    fn hit_testing_examples() {
        let d = d1();
        for (p, want) in [
            (Point::new(25.0, 65.0), Some(S1)),
            (Point::new(200.0, 150.0), Some(P1)),
            (Point::new(-10.0, -10.0), None),
            (Point::new(5.0, 5.0), Some(DIV_A)),
            (Point::new(200.0, 300.0), Some(DIV_B)),
        ] {
            assert_eq!(brute_node_at_point(&d, p), want, "oracle at {p:?}");
            assert_eq!(d.node_at_point(p), want, "kernel at {p:?}");
        }
    }

    #[test]
    fn block_ancestor_examples() {
        let d = d1();
        assert_eq!(d.first_block_ancestor(S1).unwrap(), P1);
        assert_eq!(d.first_block_ancestor(P1).unwrap(), P1);
        assert_eq!(d.first_block_ancestor(HTML).unwrap(), HTML);
        assert!(d.first_block_ancestor(NodeId(99)).is_err());
    }

    #[test]
    fn tag_path_examples() {
        let d = d1();
        assert_eq!(d.tag_path(H2_A).unwrap(), ["html", "body", "div", "h2"]);
        assert_eq!(d.tag_path(HTML).unwrap(), ["html"]);
        assert_eq!(d.tag_path(S1).unwrap(), ["html", "body", "div", "p", "span"]);
    }

    #[test]
    fn document_order_examples() {
        let d = d1();
        assert_eq!(d.document_order_index(HTML).unwrap(), 0);
        assert_eq!(d.document_order_index(DIV_A).unwrap(), 2);
        assert_eq!(d.document_order_index(P2).unwrap(), 8);
    }

    #[test]
    fn ingest_order_is_document_order_not_input_order() {
        let mut raw = d1_raw();
        raw.nodes.reverse();
        let d = DocumentSnapshot::ingest(raw).unwrap();
        let ids: Vec<u64> = d.nodes().iter().map(|n| n.id.0).collect();
        assert_eq!(ids, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn scroll_clamp() {
        let d = d1();
        assert_eq!(d.clamp_scroll(254.0), 0.0);
        assert_eq!(d.clamp_scroll(-3.0), 0.0);
    }
}
