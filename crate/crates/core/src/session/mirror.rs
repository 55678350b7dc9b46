//! Client-side state rebuilt purely from the server's update stream.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::anchoring::{FeedforwardState, ItemId, LayoutState, OffloadedItem};
use crate::protocol::{Envelope, ImageMeta, ServerBody, StateSync};
use crate::selection::{styling_for, StyleDirective};

#[derive(Debug, Clone, PartialEq)]
pub struct ClientMirror {
    pub offloading: bool,
    pub doc_id: Option<String>,
    pub highlight: StyleDirective,
    pub feedforward: FeedforwardState,
    pub items: BTreeMap<ItemId, OffloadedItem>,
    pub layout: LayoutState,
    pub images: BTreeMap<String, ImageMeta>,
    pub last_seq: u64,
}

impl Default for ClientMirror {
    fn default() -> Self {
        Self {
            offloading: false,
            doc_id: None,
            highlight: styling_for(None),
            feedforward: FeedforwardState::None,
            items: BTreeMap::new(),
            layout: LayoutState::default(),
            images: BTreeMap::new(),
            last_seq: 0,
        }
    }
}

impl ClientMirror {
    /// Apply one envelope. Envelopes at or below the last applied seq are
    /// ignored, so redelivery is harmless.
    pub fn apply(&mut self, env: &Envelope) {
        if env.seq <= self.last_seq {
            return;
        }
        self.last_seq = env.seq;
        match &env.body {
            ServerBody::ModeUpdate { offloading } => self.offloading = *offloading,
            ServerBody::StyleDirective(d) => self.highlight = d.clone(),
            ServerBody::FeedforwardUpdate { state } => self.feedforward = state.clone(),
            ServerBody::SnapshotImageMeta(meta) => {
                self.images.insert(meta.selection_hash.clone(), meta.clone());
            }
            ServerBody::ItemUpdate { item } => {
                self.items.insert(item.item_id, item.clone());
            }
            ServerBody::Discarded { item_id, .. } => {
                self.items.remove(item_id);
            }
            ServerBody::DocLoaded { doc_id, .. } => self.doc_id = Some(doc_id.clone()),
            ServerBody::LayoutUpdate(l) => self.layout = *l,
            ServerBody::StateSync(sync) => self.reset(sync),
            ServerBody::OffloadCommit { .. } | ServerBody::ScrollTo(_) | ServerBody::Error(_) => {}
        }
    }

    fn reset(&mut self, sync: &StateSync) {
        self.offloading = sync.offloading;
        self.doc_id = sync.doc_id.clone();
        self.highlight = sync.highlight.clone();
        self.feedforward = sync.feedforward.clone();
        self.items = sync.items.iter().map(|i| (i.item_id, i.clone())).collect();
        self.layout = sync.layout;
        self.images = sync
            .images
            .iter()
            .map(|m| (m.selection_hash.clone(), m.clone()))
            .collect();
    }

    pub fn as_sync(&self) -> StateSync {
        StateSync {
            offloading: self.offloading,
            doc_id: self.doc_id.clone(),
            highlight: self.highlight.clone(),
            feedforward: self.feedforward.clone(),
            items: self.items.values().cloned().collect(),
            layout: self.layout,
            images: self.images.values().cloned().collect(),
        }
    }

    /// SHA-256 of the canonical JSON form of the mirrored state, hex.
    pub fn state_hash(&self) -> String {
        let json = serde_json::to_vec(&self.as_sync()).expect("state serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
