//! WebSocket host for offloading sessions.
//!
//! `GET /session/{id}?role=phone|ar|observer` upgrades to a socket. Text
//! frames carry JSON bodies; a `SnapshotImageMeta` text frame without an
//! inline payload must be followed by one binary frame with the PNG bytes.
//! Uploaded images can be fetched from `/session/{id}/image/{image_id}`.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use serde::Deserialize;
use tokio::sync::mpsc;

use offload_kernel::protocol::{decode_client_message, ClientBody, ErrorCode, Role};
use offload_kernel::session::{Audience, ClientId, Fail, Outbound, SessionKernel};
use offload_kernel::Config;

struct Session {
    kernel: SessionKernel,
    started: Instant,
    conns: BTreeMap<ClientId, (Role, mpsc::UnboundedSender<Message>)>,
}

impl Session {
    fn now(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    fn dispatch(&self, out: Vec<Outbound>) {
        for o in out {
            let text = match serde_json::to_string(&o.envelope) {
                Ok(t) => t,
                Err(e) => {
                    tracing::error!("cannot encode envelope: {e}");
                    continue;
                }
            };
            for (id, (role, tx)) in &self.conns {
                let wanted = match o.audience {
                    Audience::All => true,
                    Audience::Role(r) => r == *role,
                    Audience::Client(c) => c == *id,
                };
                if wanted {
                    let _ = tx.send(Message::Text(text.clone().into()));
                }
            }
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<Config>,
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Session>>>>>,
}

impl AppState {
    pub fn new(config: Config) -> Self {
        Self {
            config: Arc::new(config),
            sessions: Arc::default(),
        }
    }

    fn session(&self, id: &str) -> Arc<Mutex<Session>> {
        let mut map = self.sessions.lock().expect("session map poisoned");
        map.entry(id.to_owned())
            .or_insert_with(|| {
                Arc::new(Mutex::new(Session {
                    kernel: SessionKernel::new(id, (*self.config).clone()),
                    started: Instant::now(),
                    conns: BTreeMap::new(),
                }))
            })
            .clone()
    }

    fn existing(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.lock().expect("session map poisoned").get(id).cloned()
    }

    fn drop_if_empty(&self, id: &str) {
        let mut map = self.sessions.lock().expect("session map poisoned");
        if let Some(s) = map.get(id) {
            if s.lock().expect("session poisoned").kernel.is_empty() {
                map.remove(id);
            }
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/session/{id}", get(upgrade))
        .route("/session/{id}/image/{image_id}", get(image))
        .with_state(state)
}

/// Bind and serve until the process is stopped.
pub async fn serve(config: Config, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await
}

#[derive(Deserialize)]
struct RoleQuery {
    role: String,
}

async fn upgrade(
    ws: WebSocketUpgrade,
    Path(id): Path<String>,
    Query(q): Query<RoleQuery>,
    State(state): State<AppState>,
) -> Response {
    let role: Role = match q.role.parse() {
        Ok(r) => r,
        Err(e) => return (StatusCode::BAD_REQUEST, e).into_response(),
    };
    ws.on_upgrade(move |socket| connection(socket, state, id, role))
}

async fn image(Path((id, image_id)): Path<(String, String)>, State(state): State<AppState>) -> Response {
    let Some(session) = state.existing(&id) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let session = session.lock().expect("session poisoned");
    match session.kernel.images().by_id(&image_id) {
        Some(img) => ([(header::CONTENT_TYPE, "image/png")], img.payload.clone()).into_response(),
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn connection(socket: WebSocket, state: AppState, id: String, role: Role) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Message>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            if sink.send(msg).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let session = state.session(&id);
    let client = {
        let mut s = session.lock().expect("session poisoned");
        let now = s.now();
        match s.kernel.join(role, now) {
            Ok((client, out)) => {
                s.conns.insert(client, (role, tx.clone()));
                s.dispatch(out);
                Some(client)
            }
            Err(fail) => {
                let env = s.kernel.refusal(now, fail);
                if let Ok(text) = serde_json::to_string(&env) {
                    let _ = tx.send(Message::Text(text.into()));
                }
                None
            }
        }
    };
    let Some(client) = client else {
        drop(tx);
        let _ = writer.await;
        state.drop_if_empty(&id);
        return;
    };
    tracing::info!(session = %id, ?role, "joined");

    // A meta frame waiting for its binary payload.
    let mut pending: Option<ClientBody> = None;
    while let Some(Ok(msg)) = stream.next().await {
        let mut s = session.lock().expect("session poisoned");
        let now = s.now();
        let mut out = Vec::new();
        match msg {
            Message::Text(text) => {
                if pending.take().is_some() {
                    let fail = Fail::new(
                        ErrorCode::MissingImage,
                        "image meta was not followed by a binary payload",
                    );
                    out.extend(s.kernel.reject(client, now, fail));
                }
                match decode_client_message(text.as_str()) {
                    Ok(ClientBody::SnapshotImageMeta(meta)) if meta.payload_b64.is_none() => {
                        pending = Some(ClientBody::SnapshotImageMeta(meta));
                    }
                    Ok(body) => out.extend(s.kernel.route(client, now, body, None)),
                    Err(e) => out.extend(
                        s.kernel
                            .reject(client, now, Fail::new(ErrorCode::Schema, e.to_string())),
                    ),
                }
            }
            Message::Binary(bytes) => match pending.take() {
                Some(body) => out.extend(s.kernel.route(client, now, body, Some(bytes.to_vec()))),
                None => {
                    let fail = Fail::new(ErrorCode::Schema, "binary frame without a preceding SnapshotImageMeta");
                    out.extend(s.kernel.reject(client, now, fail));
                }
            },
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
        s.dispatch(out);
    }

    {
        let mut s = session.lock().expect("session poisoned");
        s.kernel.leave(client);
        s.conns.remove(&client);
    }
    drop(tx);
    let _ = writer.await;
    state.drop_if_empty(&id);
    tracing::info!(session = %id, ?role, "left");
}
