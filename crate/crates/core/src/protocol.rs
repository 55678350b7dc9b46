//! Session wire protocol.
//!
//! Clients send `{body_type, body}` objects. The server wraps everything it
//! emits in an envelope `{seq, session, sender_role, t_server, body_type,
//! body}` with a per-session strictly increasing `seq`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::anchoring::{FeedforwardState, ItemId, LayoutState, OffloadedItem, Pose, SurfacePlane};
use crate::document::{RawSnapshot, ScrollState};
use crate::gesture::{HandSample, TouchSample};
use crate::selection::StyleDirective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Phone,
    Ar,
    Observer,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phone" => Ok(Role::Phone),
            "ar" => Ok(Role::Ar),
            "observer" => Ok(Role::Observer),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

/// Origin of a message. `Env` is only used by recorded traces for
/// environment input (surfaces, tracked poses).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sender {
    Phone,
    Ar,
    Observer,
    Env,
    Server,
}

impl From<Role> for Sender {
    fn from(r: Role) -> Self {
        match r {
            Role::Phone => Sender::Phone,
            Role::Ar => Sender::Ar,
            Role::Observer => Sender::Observer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseTarget {
    Phone,
    Head,
}

/// Metadata of a pre-transmitted selection image. Over the socket the
/// payload follows as the next binary frame; in trace files it is inlined
/// as base64.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image_id: String,
    pub selection_hash: String,
    pub width_px: u32,
    pub height_px: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub byte_len: Option<u64>,
    /// Inline payload, used by trace files. Never relayed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_b64: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "body_type", content = "body")]
pub enum ClientBody {
    Hello {
        #[serde(default)]
        client: Option<String>,
    },
    DocSnapshot(RawSnapshot),
    Scroll(ScrollState),
    TouchSample(TouchSample),
    HandSample(HandSample),
    PoseUpdate {
        target: PoseTarget,
        pose: Pose,
    },
    SurfaceSet {
        surfaces: Vec<SurfacePlane>,
    },
    SnapshotImageMeta(ImageMeta),
    ItemTap {
        item_id: ItemId,
    },
    LayoutToggle {},
    StripScroll {
        delta: i64,
    },
}

impl ClientBody {
    pub fn body_type(&self) -> &'static str {
        match self {
            ClientBody::Hello { .. } => "Hello",
            ClientBody::DocSnapshot(_) => "DocSnapshot",
            ClientBody::Scroll(_) => "Scroll",
            ClientBody::TouchSample(_) => "TouchSample",
            ClientBody::HandSample(_) => "HandSample",
            ClientBody::PoseUpdate { .. } => "PoseUpdate",
            ClientBody::SurfaceSet { .. } => "SurfaceSet",
            ClientBody::SnapshotImageMeta(_) => "SnapshotImageMeta",
            ClientBody::ItemTap { .. } => "ItemTap",
            ClientBody::LayoutToggle {} => "LayoutToggle",
            ClientBody::StripScroll { .. } => "StripScroll",
        }
    }

    /// Whether `sender` may send this body.
    pub fn allowed_from(&self, sender: Sender) -> bool {
        use ClientBody::*;
        match (self, sender) {
            (_, Sender::Server) => false,
            (Hello { .. }, _) => true,
            (DocSnapshot(_) | Scroll(_) | TouchSample(_) | SnapshotImageMeta(_), s) => s == Sender::Phone,
            (HandSample(_) | ItemTap { .. } | LayoutToggle {} | StripScroll { .. }, s) => s == Sender::Ar,
            (PoseUpdate { .. } | SurfaceSet { .. }, s) => s != Sender::Observer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardDirection {
    /// Thrown away from the body.
    Away,
    /// Pushed back toward the phone.
    TowardPhone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Schema,
    Forbidden,
    RoleConflict,
    InvalidSnapshot,
    NoDocument,
    StaleDocument,
    NoSelection,
    InvalidRect,
    InvalidExpansion,
    MissingImage,
    ImageRejected,
    UnknownItem,
    GestureRejected,
    InvalidPose,
    InvalidSurface,
    NoPhoneItems,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

/// Everything a client needs to reconstruct authoritative state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSync {
    pub offloading: bool,
    pub doc_id: Option<String>,
    pub highlight: StyleDirective,
    pub feedforward: FeedforwardState,
    pub items: Vec<OffloadedItem>,
    pub layout: LayoutState,
    pub images: Vec<ImageMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "body_type", content = "body")]
pub enum ServerBody {
    ModeUpdate {
        offloading: bool,
    },
    StyleDirective(StyleDirective),
    FeedforwardUpdate {
        state: FeedforwardState,
    },
    SnapshotImageMeta(ImageMeta),
    OffloadCommit {
        item_id: ItemId,
        selection_hash: String,
        image_id: String,
    },
    ItemUpdate {
        item: OffloadedItem,
    },
    Discarded {
        item_id: ItemId,
        direction: DiscardDirection,
        vector: Vector3<f64>,
    },
    ScrollTo(ScrollState),
    DocLoaded {
        doc_id: String,
        url: String,
    },
    LayoutUpdate(LayoutState),
    StateSync(StateSync),
    Error(ErrorBody),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    pub session: String,
    pub sender_role: Sender,
    pub t_server: u64,
    #[serde(flatten)]
    pub body: ServerBody,
}

/// Parse one client text frame.
pub fn decode_client_message(text: &str) -> Result<ClientBody, serde_json::Error> {
    serde_json::from_str(text)
}
