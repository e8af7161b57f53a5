//! HTTP/JSON front end for oracle feedback sessions.
//!
//! Each session sits behind its own mutex, so submits and verdicts on one
//! session are applied in a single total order while different sessions run
//! independently. With a data directory every change is appended to
//! `<dir>/<session_id>.jsonl` before the response is sent, and existing
//! journals are replayed at startup.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use adf_core::fusion::FusionUpdateResult;
use adf_core::oracle::api::{CreateSession, DeltaKind, ErrorBody, FeedbackRequest, StateDelta};
use adf_core::oracle::{
    append_journal, load_journal, OracleError, PendingSummary, SessionSnapshot, SessionState, SessionSummary,
    Submission,
};
use adf_core::stream::FusionEvent;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use tokio::sync::{broadcast, Mutex, RwLock};

const DELTA_BUFFER: usize = 1024;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<OracleError> for ApiError {
    fn from(e: OracleError) -> Self {
        let status = StatusCode::from_u16(e.status_code()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        Self::new(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(r.status(), r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            status: self.status.as_u16(),
            error: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Session {
    state: Mutex<SessionState>,
    deltas: broadcast::Sender<StateDelta>,
}

impl Session {
    fn new(state: SessionState) -> Arc<Self> {
        Arc::new(Self {
            state: Mutex::new(state),
            deltas: broadcast::channel(DELTA_BUFFER).0,
        })
    }
}

/// Shared service state.
pub struct AppState {
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    data_dir: Option<PathBuf>,
}

impl AppState {
    pub fn in_memory() -> Arc<Self> {
        Arc::new(Self {
            sessions: RwLock::new(BTreeMap::new()),
            data_dir: None,
        })
    }

    /// Persists under `dir`, replaying any `*.jsonl` journals found there.
    pub fn with_data_dir(dir: &Path) -> Result<Arc<Self>, OracleError> {
        std::fs::create_dir_all(dir)?;
        let mut sessions = BTreeMap::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let state = load_journal(&path, None).map_err(|e| match e {
                OracleError::Journal { line, message } => OracleError::Journal {
                    line,
                    message: format!("{}: {message}", path.display()),
                },
                other => other,
            })?;
            tracing::info!(session = state.session_id(), path = %path.display(), "replayed journal");
            sessions.insert(state.session_id().to_string(), Session::new(state));
        }
        Ok(Arc::new(Self {
            sessions: RwLock::new(sessions),
            data_dir: Some(dir.to_path_buf()),
        }))
    }

    async fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| OracleError::UnknownSession(id.into()).into())
    }

    fn journal_path(&self, id: &str) -> Option<PathBuf> {
        self.data_dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    /// Writes new journal entries; called with the session lock held.
    fn flush(&self, state: &mut SessionState) -> ApiResult<()> {
        let entries = state.take_unflushed();
        if let Some(path) = self.journal_path(state.session_id()) {
            append_journal(&path, &entries)?;
        }
        Ok(())
    }

    /// Expires overdue verdicts and announces them.
    fn expire(&self, session: &Session, state: &mut SessionState) -> ApiResult<()> {
        for id in state.expire(Utc::now()) {
            let _ = session.deltas.send(delta(state, DeltaKind::Expired, id, None));
        }
        self.flush(state)
    }
}

fn delta(
    state: &SessionState,
    kind: DeltaKind,
    event_id: String,
    history_entry: Option<adf_core::fusion::HistoryEntry>,
) -> StateDelta {
    StateDelta {
        version: state.version(),
        kind,
        event_id,
        weights: state.weights().to_vec(),
        history_entry,
        counts: state.counts(),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}/events", post(submit_event))
        .route("/sessions/{id}/pending", get(pending))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/state", get(snapshot))
        .route("/sessions/{id}/journal", get(journal))
        .route("/sessions/{id}/stream", get(stream_deltas))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Vec<SessionSummary>> {
    let sessions: Vec<Arc<Session>> = app.sessions.read().await.values().cloned().collect();
    let mut out = Vec::with_capacity(sessions.len());
    for s in sessions {
        out.push(s.state.lock().await.summary());
    }
    Json(out)
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionSummary>)> {
    let Json(req) = body?;
    let mut sessions = app.sessions.write().await;
    let id = match &req.session_id {
        Some(id) => {
            if sessions.contains_key(id) {
                return Err(OracleError::SessionExists(id.clone()).into());
            }
            id.clone()
        }
        None => (sessions.len() + 1..)
            .map(|n| format!("session-{n}"))
            .find(|id| !sessions.contains_key(id))
            .expect("unbounded range"),
    };
    let mut state = SessionState::new(req.into_spec(id.clone()), Utc::now())?;
    if let Some(path) = app.journal_path(&id) {
        if path.exists() {
            return Err(OracleError::SessionExists(id).into());
        }
    }
    app.flush(&mut state)?;
    let summary = state.summary();
    sessions.insert(id, Session::new(state));
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn submit_event(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<FusionEvent>, JsonRejection>,
) -> ApiResult<Json<Submission>> {
    let session = app.session(&id).await?;
    let Json(event) = body?;
    let mut state = session.state.lock().await;
    app.expire(&session, &mut state)?;
    let before = state.history().len();
    let sub = state.submit_event(event, Utc::now());
    app.flush(&mut state)?;
    let sub = sub?;
    let entry = (state.history().len() > before).then(|| state.history().last().cloned()).flatten();
    let _ = session.deltas.send(delta(&state, DeltaKind::Submitted, sub.event_id.clone(), entry));
    Ok(Json(sub))
}

async fn pending(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<Vec<PendingSummary>>> {
    let session = app.session(&id).await?;
    let mut state = session.state.lock().await;
    app.expire(&session, &mut state)?;
    Ok(Json(state.pending().map(PendingSummary::from).collect()))
}

async fn feedback(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> ApiResult<Json<FusionUpdateResult>> {
    let session = app.session(&id).await?;
    let Json(req) = body?;
    let mut state = session.state.lock().await;
    app.expire(&session, &mut state)?;
    let before = state.history().len();
    let result = state.apply_feedback(&req.event_id, req.label, Utc::now());
    app.flush(&mut state)?;
    let result = result?;
    let entry = (state.history().len() > before).then(|| state.history().last().cloned()).flatten();
    let _ = session.deltas.send(delta(&state, DeltaKind::Resolved, req.event_id, entry));
    Ok(Json(result))
}

#[derive(Debug, Deserialize)]
struct StateQuery {
    last: Option<usize>,
}

async fn snapshot(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<StateQuery>, QueryRejection>,
) -> ApiResult<Json<SessionSnapshot>> {
    let session = app.session(&id).await?;
    let Query(q) = query?;
    let mut state = session.state.lock().await;
    app.expire(&session, &mut state)?;
    Ok(Json(state.snapshot(q.last)))
}

/// The session's journal as JSONL, replayable offline.
async fn journal(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let session = app.session(&id).await?;
    let state = session.state.lock().await;
    let mut body = Vec::new();
    for entry in state.journal() {
        serde_json::to_writer(&mut body, entry).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        body.push(b'\n');
    }
    Ok(([(axum::http::header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

/// Server-sent events: one `snapshot`, then a `delta` per state change.
/// A subscriber that falls behind gets a `lagged` event and should refetch.
async fn stream_deltas(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let session = app.session(&id).await?;
    let (first, rx) = {
        let state = session.state.lock().await;
        // Subscribing under the lock: no change can fall between the two.
        (state.snapshot(Some(0)), session.deltas.subscribe())
    };
    let head = stream::once(async move { Ok(json_event("snapshot", &first)) });
    let tail = stream::unfold(rx, |mut rx| async move {
        let event = match rx.recv().await {
            Ok(d) => json_event("delta", &d),
            Err(broadcast::error::RecvError::Lagged(n)) => Event::default().event("lagged").data(n.to_string()),
            Err(broadcast::error::RecvError::Closed) => return None,
        };
        Some((Ok(event), rx))
    });
    Ok(Sse::new(head.chain(tail)).keep_alive(KeepAlive::default()))
}

fn json_event<T: serde::Serialize>(name: &str, value: &T) -> Event {
    Event::default()
        .event(name)
        .data(serde_json::to_string(value).expect("wire types serialize"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_errors_map_to_statuses() {
        let status = |e: OracleError| ApiError::from(e).status.as_u16();
        assert_eq!(status(OracleError::UnknownSession("s".into())), 404);
        assert_eq!(status(OracleError::AlreadyResolved("e".into())), 409);
        assert_eq!(status(OracleError::Validation("bad".into())), 422);
        assert_eq!(
            status(adf_core::fusion::FusionError::DimensionMismatch { expected: 2, actual: 3 }.into()),
            422
        );
    }
}
