//! The authoritative session kernel.
//!
//! Clients send raw input; the kernel runs gestures, selection and anchoring
//! and answers with ordered envelopes. One kernel per session, driven
//! serially: the server wraps it in a lock, replay calls it directly.

mod image;
mod mirror;

use std::collections::BTreeMap;

use base64::Engine as _;
use nalgebra::Vector3;

pub use image::{png_dimensions, selection_hash, solid_png, validate_image, ImageError, ImageStore, StoredImage};
pub use mirror::ClientMirror;

use crate::anchoring::{
    classify_region, counterpart_scroll_target, feedforward, order_index_for, resolve_anchor, AnchorError,
    FeedforwardState, ItemBoard, ItemId, ItemSize, Pose, RegionId, SurfacePlane,
};
use crate::config::Config;
use crate::document::{DocumentSnapshot, LayoutRect, Point, ScrollState};
use crate::gesture::{GestureEngine, GestureEvent, HandSample, TouchSample};
use crate::protocol::{
    decode_client_message, ClientBody, DiscardDirection, Envelope, ErrorBody, ErrorCode, ImageMeta, PoseTarget, Role,
    Sender, ServerBody, StateSync,
};
use crate::selection::{
    expand_selection, quick_target, rubberband, select_similar, select_tap, selection_covers, styling_for, Selection,
    SelectionError, StyleDirective,
};

/// Connection handle issued by [`SessionKernel::join`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClientId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audience {
    All,
    Role(Role),
    Client(ClientId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub audience: Audience,
    pub envelope: Envelope,
}

#[derive(Debug, Clone)]
enum Grab {
    /// The phone selection being carried out into space.
    Selection(Selection),
    Item(ItemId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fail {
    pub code: ErrorCode,
    pub message: String,
}

impl Fail {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<SelectionError> for Fail {
    fn from(e: SelectionError) -> Self {
        let code = match e {
            SelectionError::NoSelection => ErrorCode::NoSelection,
            SelectionError::InvalidExpansion => ErrorCode::InvalidExpansion,
            SelectionError::InvalidRect => ErrorCode::InvalidRect,
            SelectionError::Query(_) => ErrorCode::NoSelection,
        };
        Fail::new(code, e.to_string())
    }
}

impl From<AnchorError> for Fail {
    fn from(e: AnchorError) -> Self {
        let code = match e {
            AnchorError::NonFinite => ErrorCode::InvalidPose,
            AnchorError::NotAnchored(_) | AnchorError::UnknownItem(_) => ErrorCode::UnknownItem,
            AnchorError::StaleDocument { .. } => ErrorCode::StaleDocument,
            AnchorError::NoPhoneItems => ErrorCode::NoPhoneItems,
            AnchorError::InvalidSurface(_) => ErrorCode::InvalidSurface,
        };
        Fail::new(code, e.to_string())
    }
}

/// Default phone pose: held in front of the chest, screen facing the user.
pub fn default_phone_pose() -> Pose {
    Pose::at(0.0, 1.25, -0.3)
}

pub fn default_head_pose() -> Pose {
    Pose::at(0.0, 1.6, 0.0)
}

#[derive(Debug)]
pub struct SessionKernel {
    id: String,
    config: Config,
    seq: u64,
    next_client: u64,
    clients: BTreeMap<ClientId, Role>,

    doc: Option<DocumentSnapshot>,
    scroll_y: f64,
    gestures: GestureEngine,
    selection: Option<Selection>,
    /// Rubberband preview while a drag is in progress.
    preview: Option<Selection>,
    highlight: StyleDirective,

    images: ImageStore,
    board: ItemBoard,
    phone: Pose,
    head: Pose,
    surfaces: Vec<SurfacePlane>,
    hand: Option<Vector3<f64>>,
    grab: Option<Grab>,
    feedforward: FeedforwardState,
    pending_scroll: Option<ScrollState>,

    t: u64,
    out: Vec<Outbound>,
}

impl SessionKernel {
    pub fn new(id: impl Into<String>, config: Config) -> Self {
        Self {
            id: id.into(),
            gestures: GestureEngine::new(config.gesture.clone()),
            config,
            seq: 0,
            next_client: 0,
            clients: BTreeMap::new(),
            doc: None,
            scroll_y: 0.0,
            selection: None,
            preview: None,
            highlight: styling_for(None),
            images: ImageStore::default(),
            board: ItemBoard::new(),
            phone: default_phone_pose(),
            head: default_head_pose(),
            surfaces: Vec::new(),
            hand: None,
            grab: None,
            feedforward: FeedforwardState::None,
            pending_scroll: None,
            t: 0,
            out: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Last assigned sequence number.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn document(&self) -> Option<&DocumentSnapshot> {
        self.doc.as_ref()
    }

    pub fn selection(&self) -> Option<&Selection> {
        self.selection.as_ref()
    }

    pub fn board(&self) -> &ItemBoard {
        &self.board
    }

    pub fn images(&self) -> &ImageStore {
        &self.images
    }

    pub fn scroll_y(&self) -> f64 {
        self.scroll_y
    }

    pub fn poses(&self) -> (Pose, Pose) {
        (self.phone, self.head)
    }

    pub fn role_of(&self, client: ClientId) -> Option<Role> {
        self.clients.get(&client).copied()
    }

    pub fn has_role(&self, role: Role) -> bool {
        self.clients.values().any(|&r| r == role)
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn envelope(&self, seq: u64, body: ServerBody) -> Envelope {
        Envelope {
            seq,
            session: self.id.clone(),
            sender_role: Sender::Server,
            t_server: self.t,
            body,
        }
    }

    fn emit(&mut self, audience: Audience, body: ServerBody) {
        let seq = self.next_seq();
        let envelope = self.envelope(seq, body);
        self.out.push(Outbound { audience, envelope });
    }

    fn broadcast(&mut self, body: ServerBody) {
        self.emit(Audience::All, body);
    }

    fn take_out(&mut self) -> Vec<Outbound> {
        std::mem::take(&mut self.out)
    }

    /// Snapshot of everything a client mirrors.
    pub fn state_sync(&self) -> StateSync {
        StateSync {
            offloading: self.gestures.is_offloading(),
            doc_id: self.doc.as_ref().map(|d| d.doc_id().to_owned()),
            highlight: self.highlight.clone(),
            feedforward: self.feedforward.clone(),
            items: self.board.items().cloned().collect(),
            layout: self.board.layout(),
            images: self.images.metas().cloned().collect(),
        }
    }

    /// Register a client. The first envelope returned is its StateSync;
    /// a phone also receives any ScrollTo queued while it was away.
    pub fn join(&mut self, role: Role, t: u64) -> Result<(ClientId, Vec<Outbound>), Fail> {
        self.t = self.t.max(t);
        if role != Role::Observer && self.has_role(role) {
            return Err(Fail::new(
                ErrorCode::RoleConflict,
                format!("a {role:?} client is already connected"),
            ));
        }
        self.next_client += 1;
        let client = ClientId(self.next_client);
        self.clients.insert(client, role);
        let sync = self.state_sync();
        self.emit(Audience::Client(client), ServerBody::StateSync(sync));
        if role == Role::Phone {
            if let Some(scroll) = self.pending_scroll.take() {
                self.emit(Audience::Client(client), ServerBody::ScrollTo(scroll));
            }
        }
        Ok((client, self.take_out()))
    }

    pub fn leave(&mut self, client: ClientId) {
        self.clients.remove(&client);
    }

    /// Build the error envelope sent back for a rejected frame.
    pub fn reject(&mut self, client: ClientId, t: u64, fail: Fail) -> Vec<Outbound> {
        self.t = self.t.max(t);
        self.emit(Audience::Client(client), error_body(fail));
        self.take_out()
    }

    /// Error envelope for a connection that was refused before it got a
    /// client id.
    pub fn refusal(&mut self, t: u64, fail: Fail) -> Envelope {
        self.t = self.t.max(t);
        let seq = self.next_seq();
        self.envelope(seq, error_body(fail))
    }

    /// Decode and apply one text frame.
    pub fn route_text(&mut self, client: ClientId, t: u64, text: &str, payload: Option<Vec<u8>>) -> Vec<Outbound> {
        match decode_client_message(text) {
            Ok(body) => self.route(client, t, body, payload),
            Err(e) => self.reject(client, t, Fail::new(ErrorCode::Schema, e.to_string())),
        }
    }

    /// Apply one client message. `payload` carries the binary frame that
    /// followed a SnapshotImageMeta; without it an inline `payload_b64` is
    /// used.
    pub fn route(&mut self, client: ClientId, t: u64, body: ClientBody, payload: Option<Vec<u8>>) -> Vec<Outbound> {
        self.t = self.t.max(t);
        let Some(role) = self.role_of(client) else {
            return Vec::new();
        };
        self.route_as(Sender::from(role), Some(client), body, payload)
    }

    /// Apply environment input (tracked poses, detected surfaces) that has
    /// no client connection behind it.
    pub fn route_env(&mut self, t: u64, body: ClientBody) -> Vec<Outbound> {
        self.t = self.t.max(t);
        self.route_as(Sender::Env, None, body, None)
    }

    fn route_as(
        &mut self,
        sender: Sender,
        client: Option<ClientId>,
        body: ClientBody,
        payload: Option<Vec<u8>>,
    ) -> Vec<Outbound> {
        if !body.allowed_from(sender) {
            let fail = Fail::new(
                ErrorCode::Forbidden,
                format!("{} may not be sent by {sender:?}", body.body_type()),
            );
            self.fail(client, fail);
            return self.take_out();
        }
        let inbound = self.next_seq();
        if let Err(fail) = self.apply(inbound, body, payload) {
            self.fail(client, fail);
        }
        self.take_out()
    }

    fn fail(&mut self, client: Option<ClientId>, fail: Fail) {
        let audience = client.map_or(Audience::All, Audience::Client);
        self.emit(audience, error_body(fail));
    }

    fn apply(&mut self, inbound: u64, body: ClientBody, payload: Option<Vec<u8>>) -> Result<(), Fail> {
        match body {
            ClientBody::Hello { .. } => Ok(()),
            ClientBody::DocSnapshot(raw) => {
                let doc =
                    DocumentSnapshot::ingest(raw).map_err(|e| Fail::new(ErrorCode::InvalidSnapshot, e.to_string()))?;
                let (doc_id, url) = (doc.doc_id().to_owned(), doc.url().to_owned());
                self.doc = Some(doc);
                self.scroll_y = 0.0;
                self.selection = None;
                self.preview = None;
                self.broadcast(ServerBody::DocLoaded { doc_id, url });
                self.refresh_highlight();
                Ok(())
            }
            ClientBody::Scroll(s) => {
                let doc = self.current_doc()?;
                if s.doc_id != doc.doc_id() {
                    return Err(Fail::new(
                        ErrorCode::StaleDocument,
                        format!("scroll for {}, phone shows {}", s.doc_id, doc.doc_id()),
                    ));
                }
                if !s.scroll_y.is_finite() {
                    return Err(Fail::new(ErrorCode::Schema, "scroll_y must be finite"));
                }
                self.scroll_y = doc.clamp_scroll(s.scroll_y);
                Ok(())
            }
            ClientBody::TouchSample(s) => self.on_touch(&s),
            ClientBody::HandSample(s) => self.on_hand(&s),
            ClientBody::PoseUpdate { target, pose } => {
                match target {
                    PoseTarget::Phone => self.phone = pose,
                    PoseTarget::Head => self.head = pose,
                }
                self.refresh_feedforward();
                Ok(())
            }
            ClientBody::SurfaceSet { surfaces } => {
                for s in &surfaces {
                    s.validate()?;
                }
                self.surfaces = surfaces;
                self.refresh_feedforward();
                Ok(())
            }
            ClientBody::SnapshotImageMeta(meta) => self.on_image(inbound, meta, payload),
            ClientBody::ItemTap { item_id } => {
                let item = self.board.get(item_id)?;
                let doc = self.current_doc()?;
                let target = counterpart_scroll_target(item, doc, self.config.layout.scroll_margin)?;
                self.scroll_y = target.scroll_y;
                if self.has_role(Role::Phone) {
                    self.emit(Audience::Role(Role::Phone), ServerBody::ScrollTo(target));
                } else {
                    self.pending_scroll = Some(target);
                }
                Ok(())
            }
            ClientBody::LayoutToggle {} => {
                let changed = self
                    .board
                    .toggle_scroll_layout(&self.config.regions, &self.config.layout)?;
                self.broadcast(ServerBody::LayoutUpdate(self.board.layout()));
                self.broadcast_items(&changed);
                Ok(())
            }
            ClientBody::StripScroll { delta } => {
                let before = self.board.layout();
                let changed = self
                    .board
                    .scroll_strip(delta, &self.config.regions, &self.config.layout)?;
                if self.board.layout() != before {
                    self.broadcast(ServerBody::LayoutUpdate(self.board.layout()));
                }
                self.broadcast_items(&changed);
                Ok(())
            }
        }
    }

    fn current_doc(&self) -> Result<&DocumentSnapshot, Fail> {
        self.doc
            .as_ref()
            .ok_or_else(|| Fail::new(ErrorCode::NoDocument, "no document loaded"))
    }

    fn broadcast_items(&mut self, ids: &[ItemId]) {
        for &id in ids {
            if let Ok(item) = self.board.get(id) {
                let item = item.clone();
                self.broadcast(ServerBody::ItemUpdate { item });
            }
        }
    }

    /// Broadcast the highlight if it changed.
    fn refresh_highlight(&mut self) {
        let next = styling_for(self.preview.as_ref().or(self.selection.as_ref()));
        if next != self.highlight {
            self.highlight = next.clone();
            self.broadcast(ServerBody::StyleDirective(next));
        }
    }

    fn set_feedforward(&mut self, next: FeedforwardState) {
        if next != self.feedforward {
            self.feedforward = next.clone();
            self.broadcast(ServerBody::FeedforwardUpdate { state: next });
        }
    }

    fn region_of(&self, hand: &Vector3<f64>) -> Result<RegionId, Fail> {
        Ok(classify_region(hand, &self.phone, &self.head, &self.config.regions)?)
    }

    fn refresh_feedforward(&mut self) {
        let (Some(_), Some(hand)) = (&self.grab, self.hand) else {
            return;
        };
        if let Ok(region) = self.region_of(&hand) {
            let next = feedforward(
                Some(region),
                &hand,
                &self.surfaces,
                self.config.regions.implicit_floor_y,
            );
            self.set_feedforward(next);
        }
    }

    fn page_point(&self, p: Point) -> Point {
        Point::new(p.x, p.y + self.scroll_y)
    }

    fn page_rect(&self, r: LayoutRect) -> LayoutRect {
        LayoutRect::new(r.x, r.y + self.scroll_y, r.w, r.h)
    }

    fn on_touch(&mut self, s: &TouchSample) -> Result<(), Fail> {
        let events = self
            .gestures
            .feed_touch(s)
            .map_err(|e| Fail::new(ErrorCode::GestureRejected, e.to_string()))?;
        // Later events still run when an earlier one fails; the first
        // failure is reported.
        let mut first_err = None;
        for ev in events {
            if let Err(e) = self.on_touch_event(ev) {
                first_err.get_or_insert(e);
            }
        }
        first_err.map_or(Ok(()), Err)
    }

    fn on_touch_event(&mut self, ev: GestureEvent) -> Result<(), Fail> {
        match ev {
            GestureEvent::QuasimodeEnter => {
                self.broadcast(ServerBody::ModeUpdate { offloading: true });
                Ok(())
            }
            GestureEvent::QuasimodeExit => {
                self.broadcast(ServerBody::ModeUpdate { offloading: false });
                self.preview = None;
                if !matches!(self.grab, Some(Grab::Selection(_))) {
                    self.selection = None;
                }
                self.refresh_highlight();
                Ok(())
            }
            GestureEvent::Tap { pos } => {
                let p = self.page_point(pos);
                let doc = self.current_doc()?;
                let hit = doc
                    .node_at_point(p)
                    .ok_or_else(|| Fail::from(SelectionError::NoSelection))?;
                let next = match &self.selection {
                    Some(sel) if !sel.is_region() && selection_covers(doc, sel, hit).is_some() => {
                        expand_selection(doc, sel)?
                    }
                    _ => select_tap(doc, p)?,
                };
                self.selection = Some(next);
                self.refresh_highlight();
                Ok(())
            }
            GestureEvent::LongPress { pos } => {
                let p = self.page_point(pos);
                let doc = self.current_doc()?;
                let hit = doc
                    .node_at_point(p)
                    .ok_or_else(|| Fail::from(SelectionError::NoSelection))?;
                let target = self
                    .selection
                    .as_ref()
                    .and_then(|sel| selection_covers(doc, sel, hit))
                    .unwrap_or(hit);
                self.selection = Some(select_similar(doc, target)?);
                self.refresh_highlight();
                Ok(())
            }
            GestureEvent::DragStart { rect } | GestureEvent::DragUpdate { rect } => {
                let rect = self.page_rect(rect);
                let doc = self.current_doc()?;
                self.preview = rubberband(doc, rect, self.config.selection.rubberband_threshold).ok();
                self.refresh_highlight();
                Ok(())
            }
            GestureEvent::DragEnd { rect } => {
                let rect = self.page_rect(rect);
                self.preview = None;
                let result = self
                    .current_doc()
                    .and_then(|doc| Ok(rubberband(doc, rect, self.config.selection.rubberband_threshold)?));
                match result {
                    Ok(sel) => {
                        self.selection = Some(sel);
                        self.refresh_highlight();
                        Ok(())
                    }
                    Err(e) => {
                        self.refresh_highlight();
                        Err(e)
                    }
                }
            }
            GestureEvent::FlickOffload { start_pos, .. } => {
                self.preview = None;
                let result = self.flick(start_pos);
                self.refresh_highlight();
                result
            }
            _ => Ok(()),
        }
    }

    fn flick(&mut self, start: Point) -> Result<(), Fail> {
        let doc = self.current_doc()?;
        let selection = match &self.selection {
            Some(sel) => sel.clone(),
            None => quick_target(doc, self.page_point(start))?,
        };
        let (hash, image_id, size, order_index) = self.commit_inputs(&selection)?;
        let changed = self.board.default_phone_offload(
            selection,
            image_id.clone(),
            size,
            order_index,
            &self.config.regions,
            &self.config.layout,
        );
        self.announce_commit(changed, hash, image_id);
        self.selection = None;
        Ok(())
    }

    /// Image, size and sort key for committing `selection`, or the reason
    /// it cannot be committed.
    fn commit_inputs(&self, selection: &Selection) -> Result<(String, String, ItemSize, u64), Fail> {
        let doc = self.current_doc()?;
        if selection.doc_id != doc.doc_id() {
            return Err(AnchorError::StaleDocument {
                item_doc: selection.doc_id.clone(),
                current_doc: doc.doc_id().to_owned(),
            }
            .into());
        }
        let hash = selection_hash(selection);
        let image = self.images.get(&hash).ok_or_else(|| {
            Fail::new(
                ErrorCode::MissingImage,
                format!("no image uploaded for selection {hash}"),
            )
        })?;
        let size = item_size(&self.config, doc, selection);
        Ok((hash, image.meta.image_id.clone(), size, order_index_for(selection, doc)))
    }

    fn announce_commit(&mut self, changed: Vec<ItemId>, selection_hash: String, image_id: String) {
        let item_id = changed[0];
        self.broadcast(ServerBody::OffloadCommit {
            item_id,
            selection_hash,
            image_id,
        });
        self.broadcast_items(&changed);
    }

    fn on_image(&mut self, inbound: u64, meta: ImageMeta, payload: Option<Vec<u8>>) -> Result<(), Fail> {
        let payload = match (payload, &meta.payload_b64) {
            (Some(p), _) => p,
            (None, Some(b64)) => base64::engine::general_purpose::STANDARD
                .decode(b64)
                .map_err(|e| Fail::new(ErrorCode::ImageRejected, format!("bad base64 payload: {e}")))?,
            (None, None) => {
                return Err(Fail::new(
                    ErrorCode::MissingImage,
                    ImageError::MissingPayload(meta.image_id.clone()).to_string(),
                ))
            }
        };
        validate_image(&meta, &payload, self.config.session.max_image_bytes)
            .map_err(|e| Fail::new(ErrorCode::ImageRejected, e.to_string()))?;
        let hash = meta.selection_hash.clone();
        self.images
            .put(meta, payload, inbound)
            .map_err(|e| Fail::new(ErrorCode::ImageRejected, e.to_string()))?;
        // The relay carries the upload's own seq: the image becomes visible
        // exactly at that point in the stream.
        let stored = self.images.get(&hash).expect("just stored").meta.clone();
        let envelope = self.envelope(inbound, ServerBody::SnapshotImageMeta(stored));
        self.out.push(Outbound {
            audience: Audience::All,
            envelope,
        });
        Ok(())
    }

    fn on_hand(&mut self, s: &HandSample) -> Result<(), Fail> {
        let region = self
            .region_of(&s.pos)
            .map_err(|_| Fail::new(ErrorCode::GestureRejected, "sample has non-finite coordinates"))?;
        let over = if self.gestures.is_grabbing() {
            None
        } else {
            self.board
                .item_under(&s.pos, &self.phone, &self.head, self.config.layout.grab_margin_m)
        };
        let events = self
            .gestures
            .feed_hand(s, region, over.is_some())
            .map_err(|e| Fail::new(ErrorCode::GestureRejected, e.to_string()))?;
        self.hand = Some(s.pos);
        for ev in events {
            match ev {
                GestureEvent::PinchGrab { pos } => self.pinch_grab(pos, region, over)?,
                GestureEvent::PinchMove { pos, region } => {
                    if self.grab.is_some() {
                        let next =
                            feedforward(Some(region), &pos, &self.surfaces, self.config.regions.implicit_floor_y);
                        self.set_feedforward(next);
                    }
                }
                GestureEvent::PinchRelease { pos, region, .. } => self.pinch_release(pos, region)?,
                GestureEvent::ThrowDiscard { pos, direction } => self.throw(pos, direction)?,
                _ => {}
            }
        }
        Ok(())
    }

    fn pinch_grab(&mut self, pos: Vector3<f64>, region: RegionId, over: Option<ItemId>) -> Result<(), Fail> {
        if let Some(id) = over {
            self.board.grab(id)?;
            self.grab = Some(Grab::Item(id));
            self.broadcast_items(&[id]);
        } else {
            let selection = self
                .selection
                .clone()
                .ok_or_else(|| Fail::from(SelectionError::NoSelection))?;
            self.current_doc()?;
            self.grab = Some(Grab::Selection(selection));
        }
        let next = feedforward(Some(region), &pos, &self.surfaces, self.config.regions.implicit_floor_y);
        self.set_feedforward(next);
        Ok(())
    }

    fn pinch_release(&mut self, pos: Vector3<f64>, region: RegionId) -> Result<(), Fail> {
        let Some(grab) = self.grab.take() else {
            return Ok(());
        };
        self.set_feedforward(FeedforwardState::None);
        let floor = self.config.regions.implicit_floor_y;
        let result = match grab {
            Grab::Item(id) => {
                let half = self.board.get(id)?.size.h / 2.0;
                let anchor = resolve_anchor(&pos, region, &self.phone, &self.head, &self.surfaces, half, floor)?;
                let changed = self
                    .board
                    .reanchor(id, anchor, &self.config.regions, &self.config.layout)?;
                self.broadcast_items(&changed);
                Ok(())
            }
            Grab::Selection(selection) => self.commit_carried(selection, pos, region),
        };
        self.after_grab();
        result
    }

    fn commit_carried(&mut self, selection: Selection, pos: Vector3<f64>, region: RegionId) -> Result<(), Fail> {
        let (hash, image_id, size, order_index) = self.commit_inputs(&selection)?;
        let anchor = resolve_anchor(
            &pos,
            region,
            &self.phone,
            &self.head,
            &self.surfaces,
            size.h / 2.0,
            self.config.regions.implicit_floor_y,
        )?;
        let changed = self.board.insert(
            selection,
            image_id.clone(),
            size,
            order_index,
            anchor,
            &self.config.regions,
            &self.config.layout,
        );
        self.announce_commit(changed, hash, image_id);
        self.selection = None;
        Ok(())
    }

    fn throw(&mut self, pos: Vector3<f64>, direction: Vector3<f64>) -> Result<(), Fail> {
        let Some(grab) = self.grab.take() else {
            return Ok(());
        };
        self.set_feedforward(FeedforwardState::None);
        if let Grab::Item(id) = grab {
            let towards = if direction.dot(&(self.phone.position - pos)) > 0.0 {
                DiscardDirection::TowardPhone
            } else {
                DiscardDirection::Away
            };
            let changed = self.board.discard(id, &self.config.regions, &self.config.layout)?;
            self.broadcast(ServerBody::Discarded {
                item_id: id,
                direction: towards,
                vector: direction,
            });
            self.broadcast_items(&changed);
        }
        self.after_grab();
        Ok(())
    }

    /// A carried selection outlives the quasimode only until it lands.
    fn after_grab(&mut self) {
        if !self.gestures.is_offloading() {
            self.selection = None;
        }
        self.refresh_highlight();
    }
}

fn error_body(fail: Fail) -> ServerBody {
    ServerBody::Error(ErrorBody {
        code: fail.code,
        message: fail.message,
    })
}

/// Size in meters of the panel showing `sel`: its page extent at phone
/// scale times the offload magnification, shrunk to fit the size cap.
pub fn item_size(config: &Config, doc: &DocumentSnapshot, sel: &Selection) -> ItemSize {
    let extent = selection_extent(doc, sel);
    let scale = config.regions.phone_screen_w_m / doc.viewport_w() * config.layout.offload_scale;
    let (w, h) = (extent.w * scale, extent.h * scale);
    let shrink = (config.layout.max_item_m / w.max(h)).min(1.0);
    ItemSize {
        w: w * shrink,
        h: h * shrink,
    }
}

/// Page-space box an offloaded selection occupies: the region rectangle,
/// or the union of the selected element boxes.
pub fn selection_extent(doc: &DocumentSnapshot, sel: &Selection) -> LayoutRect {
    if let Some(r) = sel.region_rect {
        return r;
    }
    let boxes: Vec<LayoutRect> = sel
        .node_ids
        .iter()
        .filter_map(|&id| doc.node(id).ok().map(|n| n.bbox))
        .collect();
    let Some(first) = boxes.first() else {
        return LayoutRect::new(0.0, 0.0, 0.0, 0.0);
    };
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.right(), first.bottom());
    for b in &boxes[1..] {
        x0 = x0.min(b.x);
        y0 = y0.min(b.y);
        x1 = x1.max(b.right());
        y1 = y1.max(b.bottom());
    }
    LayoutRect::new(x0, y0, x1 - x0, y1 - y0)
}
