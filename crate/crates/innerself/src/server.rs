//! HTTP and WebSocket API.
//!
//! Every error body is `{"error": {"code", "message", "retry_after_ms"?,
//! "details"?}}`. Turns are serialized per session: a turn request that
//! arrives while another one for the same session is running gets 409
//! `BUSY`. Pipeline work runs on the blocking pool.

use std::collections::HashMap;
use std::sync::{Arc, Mutex as StdMutex};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use innerself_core::storage::{emotion_trajectory, ActionPlan, TrajectoryPoint, TurnRecord};
use innerself_core::voice::EnrollmentSample;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, Mutex};

use crate::engine::{EnrollError, Engine, LiveEvent, SessionError, TurnError, TurnInput};
use crate::export::export_session;
use crate::session::Session;
use crate::store::StoreError;
use crate::wav;

pub const OPENAPI_JSON: &str = include_str!("../../../docs/openapi.json");

const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;
const LIVE_CHANNEL_CAPACITY: usize = 64;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub retry_after_ms: Option<u64>,
    pub details: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            retry_after_ms: None,
            details: None,
        }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(ms) = self.retry_after_ms {
            error["retry_after_ms"] = json!(ms);
        }
        if let Some(d) = self.details {
            error["details"] = d;
        }
        let mut resp = (self.status, Json(json!({ "error": error }))).into_response();
        if let Some(ms) = self.retry_after_ms {
            let secs = ms.div_ceil(1000).to_string();
            if let Ok(v) = secs.parse() {
                resp.headers_mut().insert(header::RETRY_AFTER, v);
            }
        }
        resp
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match &e {
            StoreError::UnknownSession(_) => (StatusCode::NOT_FOUND, "UNKNOWN_SESSION"),
            StoreError::SessionExists(_) => (StatusCode::CONFLICT, "SESSION_EXISTS"),
            StoreError::InvalidId(_) => (StatusCode::BAD_REQUEST, "INVALID_ID"),
            StoreError::ChunkMissing { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "CHUNK_MISSING"),
            StoreError::ChecksumMismatch { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "CHECKSUM_MISMATCH"),
            StoreError::Corrupt(_) => (StatusCode::INTERNAL_SERVER_ERROR, "STORE_CORRUPT"),
            StoreError::Unavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "STORE_UNAVAILABLE"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<TurnError> for ApiError {
    fn from(e: TurnError) -> Self {
        if let TurnError::Store(s) = e {
            return s.into();
        }
        let code = e.code();
        let status = match &e {
            TurnError::EmptyUtterance | TurnError::ClipTooShort { .. } | TurnError::UtteranceTooLong { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ if code.ends_with("_UNAVAILABLE") => StatusCode::SERVICE_UNAVAILABLE,
            _ if code.ends_with("_FAILED") && code != "RESPONSE_FAILED" => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut err = ApiError::new(status, code, e.to_string());
        err.retry_after_ms = e.retry_after_ms();
        err
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::InvalidUserName(m) => ApiError::bad_request("INVALID_USER_NAME", m),
            SessionError::InvalidPlan(m) => ApiError::bad_request("INVALID_PLAN", m),
            SessionError::Store(s) => s.into(),
        }
    }
}

impl From<EnrollError> for ApiError {
    fn from(e: EnrollError) -> Self {
        match e {
            EnrollError::NoSamples => ApiError::bad_request("NO_SAMPLES", e.to_string()),
            EnrollError::NoValidSamples { ref warnings } => {
                let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "NO_VALID_SAMPLES", e.to_string());
                err.details = Some(json!({ "rejected": warnings }));
                err
            }
            EnrollError::Voice(v) => ApiError::new(StatusCode::BAD_GATEWAY, "ENCODER_FAILED", v.to_string()),
            EnrollError::Store(s) => s.into(),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub struct AppState {
    pub engine: Arc<Engine>,
    sessions: StdMutex<HashMap<String, Arc<Mutex<Session>>>>,
    live: StdMutex<HashMap<String, broadcast::Sender<LiveEvent>>>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>) -> Arc<Self> {
        Arc::new(Self {
            engine,
            sessions: StdMutex::new(HashMap::new()),
            live: StdMutex::new(HashMap::new()),
        })
    }

    fn live_sender(&self, id: &str) -> broadcast::Sender<LiveEvent> {
        let mut live = self.live.lock().expect("live map poisoned");
        live.entry(id.to_string())
            .or_insert_with(|| broadcast::channel(LIVE_CHANNEL_CAPACITY).0)
            .clone()
    }

    /// Cached session handle, opening (and recovering) it on first use.
    async fn session(self: &Arc<Self>, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        if let Some(s) = self.sessions.lock().expect("session map poisoned").get(id) {
            return Ok(s.clone());
        }
        let engine = self.engine.clone();
        let owned = id.to_string();
        let session = blocking(move || engine.open_session(&owned).map_err(ApiError::from)).await?;
        let mut map = self.sessions.lock().expect("session map poisoned");
        Ok(map
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(session)))
            .clone())
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

pub fn router(engine: Arc<Engine>) -> Router {
    let state = AppState::new(engine);
    Router::new()
        .route("/v1/openapi", get(openapi))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/:id", get(get_session))
        .route("/v1/sessions/:id/enroll", post(enroll))
        .route("/v1/sessions/:id/turn", post(turn))
        .route("/v1/sessions/:id/history", get(history))
        .route("/v1/sessions/:id/trajectory", get(trajectory))
        .route("/v1/sessions/:id/export", get(export))
        .route("/v1/sessions/:id/plans", post(add_plan))
        .route("/v1/sessions/:id/plans/:plan_id/steps/:index", post(set_plan_step))
        .route("/v1/sessions/:id/live", get(live))
        .route("/v1/audio/:sha", get(audio))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint") })
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// Serves the API until Ctrl-C.
pub async fn serve(engine: Arc<Engine>, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI_JSON).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    user_name: String,
    #[serde(default)]
    session_id: Option<String>,
}

#[derive(Debug, Serialize)]
struct SessionView {
    session_id: String,
    user_name: String,
    created_at: String,
    alpha: usize,
    has_voice_profile: bool,
    turn_count: u64,
    buffer_chars: usize,
    plans: Vec<ActionPlan>,
}

impl SessionView {
    fn of(s: &Session) -> Self {
        let st = &s.state;
        Self {
            session_id: st.meta.session_id.clone(),
            user_name: st.meta.user_name.clone(),
            created_at: st.meta.created_at.clone(),
            alpha: st.meta.alpha,
            has_voice_profile: st.voice_profile.is_some(),
            turn_count: st.next_turn,
            buffer_chars: st.buffer.len(),
            plans: st.plans.clone(),
        }
    }
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("INVALID_REQUEST", e.to_string()))
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = json_body(&body)?;
    let engine = app.engine.clone();
    let session = blocking(move || Ok(engine.create_session(&req.user_name, req.session_id)?)).await?;
    let view = SessionView::of(&session);
    app.sessions
        .lock()
        .expect("session map poisoned")
        .insert(view.session_id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = app.session(&id).await?;
    let guard = session.lock().await;
    Ok(Json(SessionView::of(&guard)))
}

fn busy(id: &str) -> ApiError {
    ApiError::new(
        StatusCode::CONFLICT,
        "BUSY",
        format!("session `{id}` is processing another request"),
    )
}

async fn enroll(State(app): State<Arc<AppState>>, Path(id): Path<String>, mut form: Multipart) -> ApiResult<Response> {
    let session = app.session(&id).await?;
    // Pairs are matched in order: the n-th `audio` part with the n-th
    // `transcript` part.
    let mut audio = Vec::new();
    let mut transcripts = Vec::new();
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request("INVALID_REQUEST", e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request("INVALID_REQUEST", e.to_string()))?;
        match name.as_str() {
            "audio" => audio.push(
                wav::decode_wav(&bytes)
                    .map_err(|e| ApiError::bad_request("INVALID_AUDIO", format!("sample {}: {e}", audio.len())))?,
            ),
            "transcript" => transcripts.push(String::from_utf8_lossy(&bytes).trim().to_string()),
            other => return Err(ApiError::bad_request("INVALID_REQUEST", format!("unexpected part `{other}`"))),
        }
    }
    if audio.len() != transcripts.len() {
        return Err(ApiError::bad_request(
            "INVALID_REQUEST",
            format!("{} audio parts but {} transcript parts", audio.len(), transcripts.len()),
        ));
    }
    let samples: Vec<_> = audio
        .into_iter()
        .zip(transcripts)
        .map(|(clip, text)| EnrollmentSample::new(clip, text))
        .collect();
    let mut guard = session.try_lock_owned().map_err(|_| busy(&id))?;
    let engine = app.engine.clone();
    let outcome = blocking(move || Ok(engine.enroll_voice(&mut guard, samples)?)).await?;
    Ok(Json(outcome).into_response())
}

#[derive(Debug, Deserialize)]
struct TurnQuery {
    transcript: Option<String>,
    audio: Option<bool>,
}

async fn turn(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<TurnQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    let session = app.session(&id).await?;
    let mut guard = session.try_lock_owned().map_err(|_| busy(&id))?;
    let clip = wav::decode_wav(&body).map_err(|e| ApiError::bad_request("INVALID_AUDIO", e.to_string()))?;
    let want_audio = q.audio.unwrap_or(guard.state.voice_profile.is_some());
    let input = TurnInput {
        audio: clip,
        transcript_hint: q.transcript.filter(|t| !t.trim().is_empty()),
        want_audio,
    };
    let engine = app.engine.clone();
    let tx = app.live_sender(&id);
    let outcome = blocking(move || {
        Ok(engine.process_turn(&mut guard, input, &mut |ev| {
            let _ = tx.send(ev);
        })?)
    })
    .await?;
    Ok(Json(outcome).into_response())
}

#[derive(Serialize)]
struct History {
    session_id: String,
    turns: Vec<TurnRecord>,
}

async fn history(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<History>> {
    let store = app.engine.store.clone();
    let owned = id.clone();
    let turns = blocking(move || Ok(store.turns(&owned)?)).await?;
    Ok(Json(History { session_id: id, turns }))
}

#[derive(Serialize)]
struct Trajectory {
    session_id: String,
    points: Vec<TrajectoryPoint>,
}

async fn trajectory(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Trajectory>> {
    let store = app.engine.store.clone();
    let owned = id.clone();
    let turns = blocking(move || Ok(store.turns(&owned)?)).await?;
    Ok(Json(Trajectory {
        session_id: id,
        points: emotion_trajectory(&turns),
    }))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    #[serde(default)]
    include_audio: bool,
}

async fn export(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let store = app.engine.store.clone();
    let doc = blocking(move || Ok(export_session(&*store, &id, q.include_audio)?)).await?;
    Ok(Json(doc).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewPlan {
    description: String,
    steps: Vec<String>,
}

async fn add_plan(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: NewPlan = json_body(&body)?;
    let session = app.session(&id).await?;
    let mut guard = session.try_lock_owned().map_err(|_| busy(&id))?;
    let engine = app.engine.clone();
    let plan = blocking(move || Ok(engine.add_plan(&mut guard, &req.description, req.steps)?)).await?;
    Ok((StatusCode::CREATED, Json(plan)).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepUpdate {
    done: bool,
}

async fn set_plan_step(
    State(app): State<Arc<AppState>>,
    Path((id, plan_id, index)): Path<(String, String, usize)>,
    body: Bytes,
) -> ApiResult<Json<ActionPlan>> {
    let req: StepUpdate = json_body(&body)?;
    let session = app.session(&id).await?;
    let mut guard = session.try_lock_owned().map_err(|_| busy(&id))?;
    let engine = app.engine.clone();
    let plan = blocking(move || Ok(engine.set_plan_step(&mut guard, &plan_id, index, req.done)?)).await?;
    Ok(Json(plan))
}

async fn audio(State(app): State<Arc<AppState>>, Path(sha): Path<String>) -> ApiResult<Response> {
    let store = app.engine.store.clone();
    let owned = sha.clone();
    let bytes = blocking(move || Ok(store.get_audio(&owned)?)).await?;
    match bytes {
        Some(b) => Ok(([(header::CONTENT_TYPE, "audio/wav")], b).into_response()),
        None => Err(ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_AUDIO", format!("no audio `{sha}`"))),
    }
}

async fn live(State(app): State<Arc<AppState>>, Path(id): Path<String>, ws: WebSocketUpgrade) -> ApiResult<Response> {
    app.session(&id).await?;
    let rx = app.live_sender(&id).subscribe();
    Ok(ws.on_upgrade(move |socket| pump_events(socket, rx)))
}

async fn pump_events(mut socket: WebSocket, mut rx: broadcast::Receiver<LiveEvent>) {
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Ok(ev) => {
                    let Ok(text) = serde_json::to_string(&ev) else { continue };
                    if socket.send(Message::Text(text)).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return,
            },
            msg = socket.recv() => match msg {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
