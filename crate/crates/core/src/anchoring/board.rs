//! The session's offloaded items: creation, re-anchoring, discard, and the
//! free / scrollable-strip layouts of phone-anchored items.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{anchor_world_pose, Anchor, AnchorError, ItemId, ItemSize, ItemState, OffloadedItem, Pose};
use crate::config::{LayoutConfig, RegionConfig, StripSide};
use crate::selection::Selection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    #[default]
    Free,
    Strip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayoutState {
    pub mode: LayoutMode,
    pub window_start: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ItemBoard {
    items: BTreeMap<ItemId, OffloadedItem>,
    tombstones: BTreeMap<ItemId, OffloadedItem>,
    layout: LayoutState,
    /// Free-layout anchors of phone items, kept while the strip is shown.
    saved_free: BTreeMap<ItemId, Anchor>,
    next_id: u64,
}

impl ItemBoard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn layout(&self) -> LayoutState {
        self.layout
    }

    /// Live (not discarded) items in creation order.
    pub fn items(&self) -> impl Iterator<Item = &OffloadedItem> {
        self.items.values()
    }

    pub fn get(&self, id: ItemId) -> Result<&OffloadedItem, AnchorError> {
        self.items.get(&id).ok_or(AnchorError::UnknownItem(id))
    }

    pub fn tombstones(&self) -> impl Iterator<Item = &OffloadedItem> {
        self.tombstones.values()
    }

    fn phone_items(&self) -> impl Iterator<Item = &OffloadedItem> {
        self.items
            .values()
            .filter(|i| i.state == ItemState::Anchored && i.anchor.is_phone())
    }

    fn side(layout: &LayoutConfig) -> f64 {
        match layout.strip_side {
            StripSide::Right => 1.0,
            StripSide::Left => -1.0,
        }
    }

    fn strip_x(size: ItemSize, regions: &RegionConfig, layout: &LayoutConfig) -> f64 {
        Self::side(layout) * (regions.phone_screen_w_m / 2.0 + layout.strip_gap_m + size.w / 2.0)
    }

    fn alloc(&mut self) -> ItemId {
        self.next_id += 1;
        ItemId(self.next_id)
    }

    /// Create a phone-anchored item at the next free slot of the strip
    /// beside the phone (slot pitch = item height + gap).
    pub fn default_phone_offload(
        &mut self,
        selection: Selection,
        image_id: String,
        size: ItemSize,
        order_index: u64,
        regions: &RegionConfig,
        layout: &LayoutConfig,
    ) -> Vec<ItemId> {
        let slot = self.phone_items().count() as f64;
        let y = regions.phone_screen_h_m / 2.0 - size.h / 2.0 - slot * (size.h + layout.strip_gap_m);
        let anchor = Anchor::PhoneAnchored {
            offset: Vector3::new(Self::strip_x(size, regions, layout), y, 0.0),
        };
        self.insert(selection, image_id, size, order_index, anchor, regions, layout)
    }

    /// Create an item with an explicit anchor. Returns every item whose
    /// record changed (the new one first).
    #[allow(clippy::too_many_arguments)]
    pub fn insert(
        &mut self,
        selection: Selection,
        image_id: String,
        size: ItemSize,
        order_index: u64,
        anchor: Anchor,
        regions: &RegionConfig,
        layout: &LayoutConfig,
    ) -> Vec<ItemId> {
        let item_id = self.alloc();
        let is_phone = anchor.is_phone();
        self.items.insert(
            item_id,
            OffloadedItem {
                item_id,
                doc_id: selection.doc_id.clone(),
                selection,
                image_id,
                size,
                anchor: anchor.clone(),
                order_index,
                state: ItemState::Anchored,
                strip_slot: None,
                visible: true,
            },
        );
        let mut changed = vec![item_id];
        if is_phone && self.layout.mode == LayoutMode::Strip {
            self.saved_free.insert(item_id, anchor);
            changed.extend(
                self.relayout_strip(regions, layout)
                    .into_iter()
                    .filter(|&i| i != item_id),
            );
        }
        changed
    }

    /// Mark an item as held by a pinch.
    pub fn grab(&mut self, id: ItemId) -> Result<(), AnchorError> {
        let item = self.items.get_mut(&id).ok_or(AnchorError::UnknownItem(id))?;
        item.state = ItemState::Floating;
        Ok(())
    }

    /// Drop a held item with its new anchor. Returns the changed items.
    pub fn reanchor(
        &mut self,
        id: ItemId,
        anchor: Anchor,
        regions: &RegionConfig,
        layout: &LayoutConfig,
    ) -> Result<Vec<ItemId>, AnchorError> {
        let item = self.items.get_mut(&id).ok_or(AnchorError::UnknownItem(id))?;
        let was_in_strip = item.strip_slot.is_some();
        item.state = ItemState::Anchored;
        item.anchor = anchor.clone();
        item.strip_slot = None;
        item.visible = true;
        let mut changed = vec![id];
        if self.layout.mode == LayoutMode::Strip {
            if anchor.is_phone() {
                self.saved_free.insert(id, anchor);
            } else {
                self.saved_free.remove(&id);
            }
            if was_in_strip || self.items[&id].anchor.is_phone() {
                changed.extend(self.relayout_strip(regions, layout).into_iter().filter(|&i| i != id));
            }
        }
        Ok(changed)
    }

    /// Discard an item. The record moves to the tombstone log; a second
    /// discard of the same id fails.
    pub fn discard(
        &mut self,
        id: ItemId,
        regions: &RegionConfig,
        layout: &LayoutConfig,
    ) -> Result<Vec<ItemId>, AnchorError> {
        let mut item = self.items.remove(&id).ok_or(AnchorError::UnknownItem(id))?;
        item.state = ItemState::Discarded;
        item.strip_slot = None;
        item.visible = false;
        let was_phone = item.anchor.is_phone();
        self.tombstones.insert(id, item);
        self.saved_free.remove(&id);
        if was_phone && self.layout.mode == LayoutMode::Strip {
            return Ok(self.relayout_strip(regions, layout));
        }
        Ok(Vec::new())
    }

    /// Switch between free placement and the scrollable strip sorted by
    /// document order. Returns the items whose placement changed.
    pub fn toggle_scroll_layout(
        &mut self,
        regions: &RegionConfig,
        layout: &LayoutConfig,
    ) -> Result<Vec<ItemId>, AnchorError> {
        if self.phone_items().next().is_none() {
            return Err(AnchorError::NoPhoneItems);
        }
        match self.layout.mode {
            LayoutMode::Free => {
                self.saved_free = self.phone_items().map(|i| (i.item_id, i.anchor.clone())).collect();
                self.layout = LayoutState {
                    mode: LayoutMode::Strip,
                    window_start: 0,
                };
                Ok(self.relayout_strip(regions, layout))
            }
            LayoutMode::Strip => {
                let saved = std::mem::take(&mut self.saved_free);
                let mut changed = Vec::new();
                for item in self.items.values_mut() {
                    if item.strip_slot.take().is_some() || !item.visible {
                        if let Some(anchor) = saved.get(&item.item_id) {
                            item.anchor = anchor.clone();
                        }
                        item.visible = true;
                        changed.push(item.item_id);
                    }
                }
                self.layout = LayoutState::default();
                Ok(changed)
            }
        }
    }

    /// Scroll the strip window by `delta` slots.
    pub fn scroll_strip(
        &mut self,
        delta: i64,
        regions: &RegionConfig,
        layout: &LayoutConfig,
    ) -> Result<Vec<ItemId>, AnchorError> {
        if self.layout.mode != LayoutMode::Strip {
            return Ok(Vec::new());
        }
        let count = self.phone_items().count();
        let max_start = count.saturating_sub(layout.strip_window) as i64;
        let start = (self.layout.window_start as i64)
            .saturating_add(delta)
            .clamp(0, max_start);
        self.layout.window_start = start as usize;
        Ok(self.relayout_strip(regions, layout))
    }

    /// Stack phone items in ascending order index (creation order breaks
    /// ties), with only the window's slots visible.
    fn relayout_strip(&mut self, regions: &RegionConfig, layout: &LayoutConfig) -> Vec<ItemId> {
        let mut order: Vec<(u64, ItemId)> = self
            .phone_items()
            .chain(
                self.items
                    .values()
                    .filter(|i| i.strip_slot.is_some() && i.anchor.is_phone()),
            )
            .map(|i| (i.order_index, i.item_id))
            .collect();
        order.sort_unstable();
        order.dedup();
        let count = order.len();
        let max_start = count.saturating_sub(layout.strip_window);
        self.layout.window_start = self.layout.window_start.min(max_start);
        let start = self.layout.window_start;

        let top = regions.phone_screen_h_m / 2.0;
        let mut cursor = 0.0;
        let mut changed = Vec::new();
        for (slot, (_, id)) in order.into_iter().enumerate() {
            let item = self.items.get_mut(&id).expect("listed from live items");
            let visible = slot >= start && slot < start + layout.strip_window;
            let y = if slot >= start {
                let y = top - cursor - item.size.h / 2.0;
                cursor += item.size.h + layout.strip_gap_m;
                y
            } else {
                top + item.size.h / 2.0
            };
            let anchor = Anchor::PhoneAnchored {
                offset: Vector3::new(Self::strip_x(item.size, regions, layout), y, 0.0),
            };
            if item.anchor != anchor || item.strip_slot != Some(slot) || item.visible != visible {
                item.anchor = anchor;
                item.strip_slot = Some(slot);
                item.visible = visible;
                changed.push(id);
            }
        }
        changed
    }

    /// The anchored item whose panel the hand is touching, if any.
    pub fn item_under(&self, hand: &Vector3<f64>, phone: &Pose, head: &Pose, margin: f64) -> Option<ItemId> {
        self.items
            .values()
            .filter(|i| i.state == ItemState::Anchored && i.visible)
            .filter_map(|i| {
                let local = anchor_world_pose(&i.anchor, phone, head).to_local(hand);
                let inside = local.x.abs() <= i.size.w / 2.0 + margin
                    && local.y.abs() <= i.size.h / 2.0 + margin
                    && local.z.abs() <= margin;
                inside.then_some((local.z.abs(), i.item_id))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::NodeId;
    use crate::selection::SelectionKind;
    use proptest::prelude::*;

    fn sel(node: u64) -> Selection {
        Selection {
            doc_id: "d".into(),
            kind: SelectionKind::ElementSet,
            node_ids: vec![NodeId(node)],
            region_rect: None,
            seed: Some(NodeId(node)),
            expansion_chain: vec![NodeId(node)],
        }
    }

    fn size() -> ItemSize {
        ItemSize { w: 0.1, h: 0.04 }
    }

    fn offset(board: &ItemBoard, id: ItemId) -> Vector3<f64> {
        match board.get(id).unwrap().anchor {
            Anchor::PhoneAnchored { offset } => offset,
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn first_offload_lands_in_slot_zero_right_of_phone() {
        let (r, l) = (RegionConfig::default(), LayoutConfig::default());
        let mut b = ItemBoard::new();
        let id = b.default_phone_offload(sel(3), "i".into(), size(), 3, &r, &l)[0];
        let o = offset(&b, id);
        assert!((o.x - (0.035 + 0.02 + 0.05)).abs() < 1e-12);
        assert!((o.y - (0.075 - 0.02)).abs() < 1e-12);
        let id2 = b.default_phone_offload(sel(4), "j".into(), size(), 4, &r, &l)[0];
        assert!((offset(&b, id2).y - (o.y - 0.06)).abs() < 1e-12);
    }

    #[test]
    fn strip_orders_by_order_index_and_round_trips() {
        let (r, l) = (RegionConfig::default(), LayoutConfig::default());
        let mut b = ItemBoard::new();
        let ids: Vec<ItemId> = [7u64, 2, 4]
            .iter()
            .map(|&o| b.default_phone_offload(sel(o), "i".into(), size(), o, &r, &l)[0])
            .collect();
        // Move one off its default slot so the round trip has something to restore.
        b.grab(ids[1]).unwrap();
        b.reanchor(
            ids[1],
            Anchor::PhoneAnchored {
                offset: Vector3::new(-0.3, 0.2, 0.01),
            },
            &r,
            &l,
        )
        .unwrap();
        let before: Vec<Anchor> = ids.iter().map(|&i| b.get(i).unwrap().anchor.clone()).collect();

        b.toggle_scroll_layout(&r, &l).unwrap();
        assert_eq!(b.layout().mode, LayoutMode::Strip);
        let mut by_height: Vec<(f64, u64)> = ids
            .iter()
            .map(|&i| (offset(&b, i).y, b.get(i).unwrap().order_index))
            .collect();
        by_height.sort_by(|a, b| b.0.total_cmp(&a.0));
        assert_eq!(by_height.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 4, 7]);

        b.toggle_scroll_layout(&r, &l).unwrap();
        let after: Vec<Anchor> = ids.iter().map(|&i| b.get(i).unwrap().anchor.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn single_item_strip_equals_slot_zero() {
        let (r, l) = (RegionConfig::default(), LayoutConfig::default());
        let mut b = ItemBoard::new();
        let id = b.default_phone_offload(sel(1), "i".into(), size(), 1, &r, &l)[0];
        let free = offset(&b, id);
        b.toggle_scroll_layout(&r, &l).unwrap();
        assert_eq!(offset(&b, id), free);
        assert_eq!(b.get(id).unwrap().strip_slot, Some(0));
    }

    #[test]
    fn strip_window_hides_overflow_and_scrolls() {
        let (r, l) = (RegionConfig::default(), LayoutConfig::default());
        let mut b = ItemBoard::new();
        let ids: Vec<ItemId> = (0..6)
            .map(|o| b.default_phone_offload(sel(o), "i".into(), size(), o, &r, &l)[0])
            .collect();
        b.toggle_scroll_layout(&r, &l).unwrap();
        let visible = |b: &ItemBoard| ids.iter().filter(|&&i| b.get(i).unwrap().visible).count();
        assert_eq!(visible(&b), 4);
        assert!(!b.get(ids[5]).unwrap().visible);
        b.scroll_strip(10, &r, &l).unwrap();
        assert_eq!(b.layout().window_start, 2);
        assert!(b.get(ids[5]).unwrap().visible);
        assert!(!b.get(ids[0]).unwrap().visible);
    }

    #[test]
    fn toggle_requires_phone_items() {
        let (r, l) = (RegionConfig::default(), LayoutConfig::default());
        assert_eq!(
            ItemBoard::new().toggle_scroll_layout(&r, &l),
            Err(AnchorError::NoPhoneItems)
        );
    }

    #[test]
    fn discard_twice_fails() {
        let (r, l) = (RegionConfig::default(), LayoutConfig::default());
        let mut b = ItemBoard::new();
        let id = b.default_phone_offload(sel(1), "i".into(), size(), 1, &r, &l)[0];
        b.discard(id, &r, &l).unwrap();
        assert_eq!(b.tombstones().next().unwrap().state, ItemState::Discarded);
        assert_eq!(b.discard(id, &r, &l), Err(AnchorError::UnknownItem(id)));
        assert!(b.get(id).is_err());
    }

    #[test]
    fn hand_hits_item_panel() {
        let (r, l) = (RegionConfig::default(), LayoutConfig::default());
        let mut b = ItemBoard::new();
        let id = b.default_phone_offload(sel(1), "i".into(), size(), 1, &r, &l)[0];
        let phone = Pose::at(0.0, 1.0, -0.4);
        let head = Pose::at(0.0, 1.6, 0.0);
        let center = phone.to_world(&offset(&b, id));
        assert_eq!(b.item_under(&center, &phone, &head, 0.03), Some(id));
        assert_eq!(
            b.item_under(&(center + Vector3::new(0.0, 0.0, 0.2)), &phone, &head, 0.03),
            None
        );
    }

    proptest! {
        #[test]
        fn strip_is_sorted_and_round_trips(orders in proptest::collection::vec(0u64..50, 1..12)) {
            let (r, l) = (RegionConfig::default(), LayoutConfig { strip_window: 100, ..Default::default() });
            let mut b = ItemBoard::new();
            let ids: Vec<ItemId> = orders
                .iter()
                .map(|&o| b.default_phone_offload(sel(o), "i".into(), size(), o, &r, &l)[0])
                .collect();
            let before: Vec<Anchor> = ids.iter().map(|&i| b.get(i).unwrap().anchor.clone()).collect();
            b.toggle_scroll_layout(&r, &l).unwrap();
            let mut placed: Vec<(usize, u64, f64)> = ids
                .iter()
                .map(|&i| {
                    let it = b.get(i).unwrap();
                    (it.strip_slot.unwrap(), it.order_index, offset(&b, i).y)
                })
                .collect();
            placed.sort_by_key(|p| p.0);
            for w in placed.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
                prop_assert!(w[0].2 > w[1].2);
            }
            b.toggle_scroll_layout(&r, &l).unwrap();
            let after: Vec<Anchor> = ids.iter().map(|&i| b.get(i).unwrap().anchor.clone()).collect();
            prop_assert_eq!(before, after);
        }
    }
}
