//! Local play service: browser sessions on the gridworld that log one
//! interaction record per objective attempt.
//!
//! Routes:
//! - `POST /sessions` with optional `{"seed": n}` creates a session.
//! - `POST /sessions/{id}/act` with `{"action": name}` steps it (`"interact"` picks the action from the faced cell).
//! - `GET /sessions/{id}/view` returns the current view.
//! - `GET /sessions/{id}/records` exports the record log as JSONL.
//! - `GET /sessions/{id}/stream` is a WebSocket pushing `{view, step_info}` frames.

pub mod session;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lawcraft_core::records::write_atomic;
use lawcraft_core::world::{generate_world, Action, WorldConfig, WorldError};
use rand::Rng;
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;
use tokio::sync::broadcast::error::RecvError;
use tracing::{info, warn};

pub use session::{resolve_interact, Frame, Session, View};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_sessions: usize,
    pub idle_timeout: Duration,
    /// How long an expired session's records stay downloadable.
    pub retention: Duration,
    /// Where records of expired sessions are written.
    pub spool_dir: Option<PathBuf>,
    pub world: WorldConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_sessions: 64,
            idle_timeout: Duration::from_secs(30 * 60),
            retention: Duration::from_secs(24 * 3600),
            spool_dir: None,
            world: WorldConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("session capacity of {0} reached")]
    Capacity(usize),
    #[error(transparent)]
    World(#[from] WorldError),
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::UnknownAction(_) => StatusCode::BAD_REQUEST,
            ServiceError::Capacity(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::World(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

struct Expired {
    at: Instant,
    jsonl: String,
}

pub struct AppState {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    expired: Mutex<HashMap<String, Expired>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<AppState> {
        Arc::new(AppState { config, sessions: Mutex::new(HashMap::new()), expired: Mutex::new(HashMap::new()) })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions.lock().unwrap().get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn create(&self, seed: Option<u64>, now: Instant) -> Result<(String, View), ServiceError> {
        let mut sessions = self.sessions.lock().unwrap();
        if sessions.len() >= self.config.max_sessions {
            return Err(ServiceError::Capacity(self.config.max_sessions));
        }
        let mut rng = rand::thread_rng();
        let seed = seed.unwrap_or_else(|| rng.gen());
        let state = generate_world(seed, &self.config.world)?;
        let id = loop {
            let id = format!("{:016x}", rng.gen::<u64>());
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let view = View::of(&state);
        sessions.insert(id.clone(), Arc::new(Mutex::new(Session::new(state, now))));
        info!(session = %id, seed, "session created");
        Ok((id, view))
    }

    pub fn act(&self, id: &str, action: &str, now: Instant) -> Result<Frame, ServiceError> {
        let session = self.session(id)?;
        let mut session = session.lock().unwrap();
        let action = match action {
            "interact" => resolve_interact(&session.state),
            name => Action::from_name(name).map_err(|_| ServiceError::UnknownAction(name.to_string()))?,
        };
        Ok(session.act(action, now)?)
    }

    /// Runs `f` with exclusive access to a live session.
    pub fn with_session<R>(&self, id: &str, f: impl FnOnce(&mut Session) -> R) -> Result<R, ServiceError> {
        let session = self.session(id)?;
        let mut guard = session.lock().unwrap();
        Ok(f(&mut guard))
    }

    pub fn view(&self, id: &str) -> Result<View, ServiceError> {
        Ok(View::of(&self.session(id)?.lock().unwrap().state))
    }

    pub fn records(&self, id: &str) -> Result<String, ServiceError> {
        if let Ok(s) = self.session(id) {
            return Ok(s.lock().unwrap().records.to_jsonl());
        }
        self.expired.lock().unwrap().get(id).map(|e| e.jsonl.clone()).ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Expires idle sessions, spooling their records, and forgets expired
    /// sessions past retention. Returns the ids expired on this pass.
    pub fn sweep(&self, now: Instant) -> Vec<String> {
        let idle: Vec<(String, Arc<Mutex<Session>>)> = {
            let mut sessions = self.sessions.lock().unwrap();
            let ids: Vec<String> = sessions
                .iter()
                .filter(|(_, s)| now.saturating_duration_since(s.lock().unwrap().last_activity) >= self.config.idle_timeout)
                .map(|(id, _)| id.clone())
                .collect();
            ids.into_iter().filter_map(|id| sessions.remove(&id).map(|s| (id, s))).collect()
        };
        let mut expired = self.expired.lock().unwrap();
        expired.retain(|_, e| now.saturating_duration_since(e.at) < self.config.retention);
        let mut ids = Vec::new();
        for (id, session) in idle {
            let jsonl = session.lock().unwrap().records.to_jsonl();
            if let Some(dir) = &self.config.spool_dir {
                let path = dir.join(format!("{id}.jsonl"));
                if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| write_atomic(&path, jsonl.as_bytes())) {
                    warn!(session = %id, path = %path.display(), error = %e, "could not spool records");
                }
            }
            info!(session = %id, "session expired");
            expired.insert(id.clone(), Expired { at: now, jsonl });
            ids.push(id);
        }
        ids
    }
}

#[derive(Debug, Default, Deserialize)]
struct CreateRequest {
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct ActRequest {
    action: String,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Option<Json<CreateRequest>>) -> Result<Response, ServiceError> {
    let seed = body.and_then(|Json(b)| b.seed);
    let (id, view) = app.create(seed, Instant::now())?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "view": view }))).into_response())
}

async fn act(State(app): State<Arc<AppState>>, Path(id): Path<String>, Json(req): Json<ActRequest>) -> Result<Json<Frame>, ServiceError> {
    Ok(Json(app.act(&id, &req.action, Instant::now())?))
}

async fn view(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<View>, ServiceError> {
    Ok(Json(app.view(&id)?))
}

async fn records(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let body = app.records(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn stream(State(app): State<Arc<AppState>>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ServiceError> {
    let rx = app.session(&id)?.lock().unwrap().stream.subscribe();
    Ok(ws.on_upgrade(move |socket| forward(socket, rx, id)))
}

async fn forward(mut socket: WebSocket, mut rx: tokio::sync::broadcast::Receiver<String>, id: String) {
    loop {
        tokio::select! {
            frame = rx.recv() => match frame {
                Ok(text) => {
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(RecvError::Lagged(n)) => {
                    warn!(session = %id, skipped = n, "dropping slow stream client");
                    break;
                }
                Err(RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}

const INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>lawcraft</title></head>
<body>
<h1>lawcraft play service</h1>
<p>The browser client is not bundled with this build. The HTTP API is live:</p>
<ul>
<li><code>POST /sessions</code></li>
<li><code>POST /sessions/{id}/act</code></li>
<li><code>GET /sessions/{id}/view</code></li>
<li><code>GET /sessions/{id}/records</code></li>
<li><code>GET /sessions/{id}/stream</code> (WebSocket)</li>
</ul>
</body></html>
";

async fn index() -> Html<&'static str> {
    Html(INDEX)
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/act", post(act))
        .route("/sessions/{id}/view", get(view))
        .route("/sessions/{id}/records", get(records))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(app)
}

/// Periodically expires idle sessions until the runtime shuts down.
pub fn spawn_sweeper(app: Arc<AppState>, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            app.sweep(Instant::now());
        }
    })
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: std::net::SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let app = AppState::new(config);
    let sweep_every = (app.config.idle_timeout / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    spawn_sweeper(app.clone(), sweep_every);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!(%addr, "listening");
    axum::serve(listener, router(app)).await
}
