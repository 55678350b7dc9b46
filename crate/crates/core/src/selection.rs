//! Element selection: tap, parent expansion, similar-elements expansion,
//! rubberband regions and the quick block-level target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{DocumentSnapshot, LayoutRect, NodeId, Point, QueryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionKind {
    ElementSet,
    Region,
}

/// A set of selected elements, or a rectangular page region.
///
/// `node_ids` is always in document order and forms an antichain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub doc_id: String,
    pub kind: SelectionKind,
    pub node_ids: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_rect: Option<LayoutRect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expansion_chain: Vec<NodeId>,
}

impl Selection {
    fn single(snap: &DocumentSnapshot, id: NodeId) -> Self {
        Self {
            doc_id: snap.doc_id().to_owned(),
            kind: SelectionKind::ElementSet,
            node_ids: vec![id],
            region_rect: None,
            seed: Some(id),
            expansion_chain: vec![id],
        }
    }

    /// Current expansion anchor: the last element of the chain.
    pub fn anchor(&self) -> Option<NodeId> {
        self.expansion_chain.last().copied()
    }

    pub fn is_region(&self) -> bool {
        self.kind == SelectionKind::Region
    }
}

/// Highlight instruction for the phone page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleDirective {
    pub node_ids: Vec<NodeId>,
    pub highlight_on: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("no element at that position")]
    NoSelection,
    #[error("only element selections can be expanded")]
    InvalidExpansion,
    #[error("selection rectangle must have positive finite area")]
    InvalidRect,
    #[error(transparent)]
    Query(#[from] QueryError),
}

pub fn select_tap(snap: &DocumentSnapshot, p: Point) -> Result<Selection, SelectionError> {
    let hit = snap.node_at_point(p).ok_or(SelectionError::NoSelection)?;
    Ok(Selection::single(snap, hit))
}

/// Replace the selection with the parent of its current anchor. The root is
/// a fixed point.
pub fn expand_selection(snap: &DocumentSnapshot, sel: &Selection) -> Result<Selection, SelectionError> {
    if sel.is_region() {
        return Err(SelectionError::InvalidExpansion);
    }
    let anchor = sel
        .anchor()
        .or_else(|| (sel.node_ids.len() == 1).then(|| sel.node_ids[0]))
        .ok_or(SelectionError::InvalidExpansion)?;
    let Some(parent) = snap.parent(anchor)? else {
        return Ok(sel.clone());
    };
    let mut chain = sel.expansion_chain.clone();
    chain.push(parent);
    Ok(Selection {
        doc_id: snap.doc_id().to_owned(),
        kind: SelectionKind::ElementSet,
        node_ids: vec![parent],
        region_rect: None,
        seed: sel.seed,
        expansion_chain: chain,
    })
}

/// Every element sharing `n`'s root-to-node tag path and class set.
pub fn select_similar(snap: &DocumentSnapshot, n: NodeId) -> Result<Selection, SelectionError> {
    let target = snap.node(n)?;
    let depth = snap.depth(n)?;
    let target_pos = snap.position_of(n).expect("resolved above");
    let same_path = |mut a: usize, mut b: usize| loop {
        if snap.nodes()[a].tag != snap.nodes()[b].tag {
            return false;
        }
        match (snap.position_parent(a), snap.position_parent(b)) {
            (Some(pa), Some(pb)) => {
                a = pa;
                b = pb;
            }
            (None, None) => return true,
            _ => return false,
        }
    };
    let node_ids = snap
        .nodes()
        .iter()
        .enumerate()
        .filter(|(pos, m)| {
            m.tag == target.tag
                && m.classes == target.classes
                && snap.depth(m.id).ok() == Some(depth)
                && same_path(*pos, target_pos)
        })
        .map(|(_, m)| m.id)
        .collect();
    Ok(Selection {
        doc_id: snap.doc_id().to_owned(),
        kind: SelectionKind::ElementSet,
        node_ids,
        region_rect: None,
        seed: Some(n),
        expansion_chain: vec![n],
    })
}

/// Region selection capturing every element whose box is covered by `rect`
/// for at least `threshold` of its own area, pruned to an antichain.
/// Elements with zero area are never captured.
pub fn rubberband(snap: &DocumentSnapshot, rect: LayoutRect, threshold: f64) -> Result<Selection, SelectionError> {
    if !rect.is_finite() || rect.w <= 0.0 || rect.h <= 0.0 {
        return Err(SelectionError::InvalidRect);
    }
    let captured: Vec<usize> = snap
        .overlapping(&rect)
        .into_iter()
        .filter(|&pos| {
            let b = snap.nodes()[pos].bbox;
            let area = b.area();
            area > 0.0 && b.intersection_area(&rect) >= threshold * area
        })
        .collect();
    let mut is_captured = vec![false; snap.len()];
    for &pos in &captured {
        is_captured[pos] = true;
    }
    let node_ids = captured
        .into_iter()
        .filter(|&pos| {
            let mut cur = snap.position_parent(pos);
            while let Some(p) = cur {
                if is_captured[p] {
                    return false;
                }
                cur = snap.position_parent(p);
            }
            true
        })
        .map(|pos| snap.nodes()[pos].id)
        .collect();
    Ok(Selection {
        doc_id: snap.doc_id().to_owned(),
        kind: SelectionKind::Region,
        node_ids,
        region_rect: Some(rect),
        seed: None,
        expansion_chain: Vec::new(),
    })
}

/// Target for quick offloads: the first block-level element at `p`.
pub fn quick_target(snap: &DocumentSnapshot, p: Point) -> Result<Selection, SelectionError> {
    let hit = snap.node_at_point(p).ok_or(SelectionError::NoSelection)?;
    let block = snap.first_block_ancestor(hit)?;
    Ok(Selection::single(snap, block))
}

/// Highlight directive for the current selection, or clear-all for none.
pub fn styling_for(sel: Option<&Selection>) -> StyleDirective {
    match sel {
        Some(sel) => StyleDirective {
            node_ids: sel.node_ids.clone(),
            highlight_on: true,
        },
        None => StyleDirective {
            node_ids: Vec::new(),
            highlight_on: false,
        },
    }
}

/// Whether `id` is a selected element or lies inside one.
pub fn selection_covers(snap: &DocumentSnapshot, sel: &Selection, id: NodeId) -> Option<NodeId> {
    sel.node_ids
        .iter()
        .copied()
        .find(|&m| m == id || snap.is_ancestor(m, id).unwrap_or(false))
}
