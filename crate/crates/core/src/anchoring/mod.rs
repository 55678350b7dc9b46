//! Spatial anchoring: the phone / field-of-view / world region split,
//! release-time anchor resolution, feedforward previews, and the world
//! poses of anchored items.
//!
//! World frame is meters, y up. Head and phone poses use the usual
//! convention where a frame's forward axis is local -Z.

mod board;

pub use board::{ItemBoard, LayoutMode, LayoutState};

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RegionConfig;
use crate::document::{DocumentSnapshot, ScrollState};
use crate::selection::Selection;

/// Plane id reported when no declared surface lies under a point.
pub const IMPLICIT_FLOOR: &str = "implicit-floor";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnchorError {
    #[error("non-finite coordinates")]
    NonFinite,
    #[error("item {0} is not anchored")]
    NotAnchored(ItemId),
    #[error("unknown or discarded item {0}")]
    UnknownItem(ItemId),
    #[error("item belongs to document {item_doc}, phone shows {current_doc}")]
    StaleDocument { item_doc: String, current_doc: String },
    #[error("no phone-anchored items to lay out")]
    NoPhoneItems,
    #[error("invalid surface {0}")]
    InvalidSurface(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRecord", into = "PoseRecord")]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

/// Wire form: `{position:[x,y,z], orientation:[x,y,z,w]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl TryFrom<PoseRecord> for Pose {
    type Error = String;

    fn try_from(r: PoseRecord) -> Result<Self, Self::Error> {
        if r.position.iter().chain(&r.orientation).any(|c| !c.is_finite()) {
            return Err("pose has non-finite components".into());
        }
        let [x, y, z, w] = r.orientation;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > 1e-6 {
            return Err(format!("orientation is not a unit quaternion (norm {})", q.norm()));
        }
        Ok(Pose {
            position: Vector3::from(r.position),
            orientation: UnitQuaternion::new_unchecked(q),
        })
    }
}

impl From<Pose> for PoseRecord {
    fn from(p: Pose) -> Self {
        let q = p.orientation.quaternion();
        PoseRecord {
            position: [p.position.x, p.position.y, p.position.z],
            orientation: [q.i, q.j, q.k, q.w],
        }
    }
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    pub fn to_world(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation * local
    }

    pub fn to_local(&self, world: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse_transform_vector(&(world - self.position))
    }

    pub fn forward(&self) -> Vector3<f64> {
        self.orientation * Vector3::new(0.0, 0.0, -1.0)
    }

    fn is_finite(&self) -> bool {
        self.position
            .iter()
            .chain(self.orientation.coords.iter())
            .all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionId {
    Phone,
    FoV,
    World,
}

/// Horizontal extent in the x/z plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizontalExtent {
    pub min_x: f64,
    pub min_z: f64,
    pub max_x: f64,
    pub max_z: f64,
}

impl HorizontalExtent {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.min_x && x <= self.max_x && z >= self.min_z && z <= self.max_z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePlane {
    pub plane_id: String,
    pub height_y: f64,
    pub extent: HorizontalExtent,
}

impl SurfacePlane {
    pub fn validate(&self) -> Result<(), AnchorError> {
        let e = &self.extent;
        let finite = [self.height_y, e.min_x, e.min_z, e.max_x, e.max_z]
            .iter()
            .all(|c| c.is_finite());
        if !finite || e.min_x > e.max_x || e.min_z > e.max_z || self.plane_id.is_empty() {
            return Err(AnchorError::InvalidSurface(self.plane_id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Anchor {
    /// Rigidly attached to the phone; offset is in the phone frame.
    PhoneAnchored { offset: Vector3<f64> },
    /// Fixed in the user's view; offset is in the head frame.
    FovAnchored { offset: Vector3<f64> },
    /// Fixed in the room, resting on a horizontal surface.
    WorldAnchored { position: Vector3<f64>, surface: String },
}

impl Anchor {
    pub fn is_phone(&self) -> bool {
        matches!(self, Anchor::PhoneAnchored { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u64);

impl std::fmt::Display for ItemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "item-{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemSize {
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemState {
    Floating,
    Anchored,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadedItem {
    pub item_id: ItemId,
    pub doc_id: String,
    pub selection: Selection,
    pub image_id: String,
    pub size: ItemSize,
    pub anchor: Anchor,
    pub order_index: u64,
    pub state: ItemState,
    /// Position in the scrollable strip, when that layout is active.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_slot: Option<usize>,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FeedforwardState {
    /// Orange plane aligned with the phone.
    PhonePlane,
    /// Blue plane fixed in the view.
    FovPlane,
    /// Vertical drop line to a surface, item decorated with a 3D frame.
    WorldDrop {
        surface: String,
        drop_point: Vector3<f64>,
        framed: bool,
    },
    None,
}

fn finite(v: &Vector3<f64>) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Distance from `p` to the phone's screen rectangle (centered on the
/// phone origin in its local x/y plane).
pub fn distance_to_phone_screen(p: &Vector3<f64>, phone: &Pose, cfg: &RegionConfig) -> f64 {
    let local = phone.to_local(p);
    let dx = (local.x.abs() - cfg.phone_screen_w_m / 2.0).max(0.0);
    let dy = (local.y.abs() - cfg.phone_screen_h_m / 2.0).max(0.0);
    Vector3::new(dx, dy, local.z).norm()
}

fn in_fov(hand: &Vector3<f64>, head: &Pose, cfg: &RegionConfig) -> bool {
    let to_hand = hand - head.position;
    let dist = to_hand.norm();
    if dist > cfg.fov_radius_m {
        return false;
    }
    if dist == 0.0 {
        return true;
    }
    let cos = to_hand.dot(&head.forward()) / dist;
    cos >= cfg.fov_half_angle_deg.to_radians().cos()
}

/// Classify a hand position. FoV takes precedence over Phone, which takes
/// precedence over World.
pub fn classify_region(
    hand: &Vector3<f64>,
    phone: &Pose,
    head: &Pose,
    cfg: &RegionConfig,
) -> Result<RegionId, AnchorError> {
    if !finite(hand) || !phone.is_finite() || !head.is_finite() {
        return Err(AnchorError::NonFinite);
    }
    if in_fov(hand, head, cfg) {
        Ok(RegionId::FoV)
    } else if distance_to_phone_screen(hand, phone, cfg) <= cfg.phone_radius_m {
        Ok(RegionId::Phone)
    } else {
        Ok(RegionId::World)
    }
}

/// The surface an item dropped from `p` would land on: the highest declared
/// surface below `p` whose extent covers it, else the implicit floor.
pub fn nearest_horizontal_surface(p: &Vector3<f64>, surfaces: &[SurfacePlane], floor_y: f64) -> (String, f64) {
    surfaces
        .iter()
        .filter(|s| s.extent.contains(p.x, p.z) && s.height_y <= p.y)
        .fold(None::<&SurfacePlane>, |best, s| match best {
            Some(b) if p.y - b.height_y <= p.y - s.height_y => Some(b),
            _ => Some(s),
        })
        .map(|s| (s.plane_id.clone(), s.height_y))
        .unwrap_or_else(|| (IMPLICIT_FLOOR.to_owned(), floor_y))
}

/// Preview for a grabbed item at `hand`; `region` is `None` when nothing is
/// grabbed.
pub fn feedforward(
    region: Option<RegionId>,
    hand: &Vector3<f64>,
    surfaces: &[SurfacePlane],
    floor_y: f64,
) -> FeedforwardState {
    match region {
        None => FeedforwardState::None,
        Some(RegionId::Phone) => FeedforwardState::PhonePlane,
        Some(RegionId::FoV) => FeedforwardState::FovPlane,
        Some(RegionId::World) => {
            let (surface, height) = nearest_horizontal_surface(hand, surfaces, floor_y);
            FeedforwardState::WorldDrop {
                surface,
                drop_point: Vector3::new(hand.x, height, hand.z),
                framed: true,
            }
        }
    }
}

/// Anchor for an item released at `release` inside `region`.
pub fn resolve_anchor(
    release: &Vector3<f64>,
    region: RegionId,
    phone: &Pose,
    head: &Pose,
    surfaces: &[SurfacePlane],
    item_half_height: f64,
    floor_y: f64,
) -> Result<Anchor, AnchorError> {
    if !finite(release) || !phone.is_finite() || !head.is_finite() || !item_half_height.is_finite() {
        return Err(AnchorError::NonFinite);
    }
    Ok(match region {
        RegionId::Phone => Anchor::PhoneAnchored {
            offset: phone.to_local(release),
        },
        RegionId::FoV => Anchor::FovAnchored {
            offset: head.to_local(release),
        },
        RegionId::World => {
            let (surface, height) = nearest_horizontal_surface(release, surfaces, floor_y);
            Anchor::WorldAnchored {
                position: Vector3::new(release.x, height + item_half_height, release.z),
                surface,
            }
        }
    })
}

/// Yaw-only rotation turning an item's +Z face toward `target`.
fn billboard(from: &Vector3<f64>, target: &Vector3<f64>) -> UnitQuaternion<f64> {
    let d = target - from;
    if d.x == 0.0 && d.z == 0.0 {
        return UnitQuaternion::identity();
    }
    UnitQuaternion::from_axis_angle(&Unit::new_unchecked(Vector3::y()), d.x.atan2(d.z))
}

/// World pose of an anchored item given the current phone and head poses.
pub fn item_world_pose(item: &OffloadedItem, phone: &Pose, head: &Pose) -> Result<Pose, AnchorError> {
    if item.state != ItemState::Anchored {
        return Err(AnchorError::NotAnchored(item.item_id));
    }
    Ok(anchor_world_pose(&item.anchor, phone, head))
}

pub fn anchor_world_pose(anchor: &Anchor, phone: &Pose, head: &Pose) -> Pose {
    match anchor {
        Anchor::PhoneAnchored { offset } => Pose::new(phone.to_world(offset), phone.orientation),
        Anchor::FovAnchored { offset } => Pose::new(head.to_world(offset), head.orientation),
        Anchor::WorldAnchored { position, .. } => Pose::new(*position, billboard(position, &head.position)),
    }
}

/// Scroll position that shows an item's counterpart on the phone, leaving
/// `margin` of the viewport above it.
pub fn counterpart_scroll_target(
    item: &OffloadedItem,
    snap: &DocumentSnapshot,
    margin: f64,
) -> Result<ScrollState, AnchorError> {
    let stale = || AnchorError::StaleDocument {
        item_doc: item.doc_id.clone(),
        current_doc: snap.doc_id().to_owned(),
    };
    if item.doc_id != snap.doc_id() {
        return Err(stale());
    }
    let top = match (item.selection.node_ids.first(), item.selection.region_rect) {
        (Some(&first), _) => snap.node(first).map_err(|_| stale())?.bbox.y,
        (None, Some(rect)) => rect.y,
        (None, None) => return Err(stale()),
    };
    Ok(ScrollState {
        doc_id: snap.doc_id().to_owned(),
        scroll_y: snap.clamp_scroll(top - margin * snap.viewport_h()),
    })
}

/// Sort key placing an item in reading order: the document order index of
/// its first element, or for a region with no elements, the number of
/// nodes starting above the region's top edge.
pub fn order_index_for(sel: &Selection, snap: &DocumentSnapshot) -> u64 {
    if let Some(&first) = sel.node_ids.first() {
        if let Ok(i) = snap.document_order_index(first) {
            return i as u64;
        }
    }
    let top = sel.region_rect.map_or(0.0, |r| r.y);
    snap.nodes().iter().filter(|n| n.bbox.y < top).count() as u64
}
