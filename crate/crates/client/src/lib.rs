//! Async client for the oracle feedback service.

use adf_core::fusion::{FusionUpdateResult, OracleLabel};
use adf_core::oracle::api::{CreateSession, ErrorBody, FeedbackRequest, StateDelta};
use adf_core::oracle::{PendingSummary, SessionSnapshot, SessionSummary, Submission};
use adf_core::stream::FusionEvent;
use futures::stream::{self, BoxStream, StreamExt};
use reqwest::{Method, RequestBuilder, Response};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    /// The service answered with an error status.
    #[error("{status}: {message}")]
    Api { status: u16, message: String },
    #[error(transparent)]
    Http(#[from] reqwest::Error),
    #[error("malformed stream message: {0}")]
    Stream(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            Self::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

/// One server-sent message from `/sessions/{id}/stream`.
#[derive(Debug, Clone, PartialEq)]
pub enum StreamMessage {
    Snapshot(Box<SessionSnapshot>),
    Delta(StateDelta),
    /// The subscriber missed this many deltas; refetch the state.
    Lagged(u64),
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        self.http.request(method, format!("{}{path}", self.base))
    }

    fn session_path(id: &str, tail: &str) -> String {
        // Session ids never contain '/', but may need escaping otherwise.
        let id: String = id
            .bytes()
            .map(|b| match b {
                b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
                other => format!("%{other:02X}"),
            })
            .collect();
        format!("/sessions/{id}/{tail}")
    }

    async fn checked(resp: Response) -> Result<Response, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Api {
            status: status.as_u16(),
            message,
        })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let resp = self.request(Method::GET, path).send().await?;
        Ok(Self::checked(resp).await?.json().await?)
    }

    async fn post<B: Serialize + ?Sized, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        let resp = self.request(Method::POST, path).json(body).send().await?;
        Ok(Self::checked(resp).await?.json().await?)
    }

    pub async fn list_sessions(&self) -> Result<Vec<SessionSummary>, ClientError> {
        self.get("/sessions").await
    }

    pub async fn create_session(&self, req: &CreateSession) -> Result<SessionSummary, ClientError> {
        self.post("/sessions", req).await
    }

    pub async fn submit_event(&self, session: &str, event: &FusionEvent) -> Result<Submission, ClientError> {
        self.post(&Self::session_path(session, "events"), event).await
    }

    pub async fn pending(&self, session: &str) -> Result<Vec<PendingSummary>, ClientError> {
        self.get(&Self::session_path(session, "pending")).await
    }

    pub async fn feedback(
        &self,
        session: &str,
        event_id: &str,
        label: OracleLabel,
    ) -> Result<FusionUpdateResult, ClientError> {
        let body = FeedbackRequest {
            event_id: event_id.into(),
            label,
        };
        self.post(&Self::session_path(session, "feedback"), &body).await
    }

    pub async fn state(&self, session: &str, last: Option<usize>) -> Result<SessionSnapshot, ClientError> {
        let mut path = Self::session_path(session, "state");
        if let Some(n) = last {
            path.push_str(&format!("?last={n}"));
        }
        self.get(&path).await
    }

    /// The session journal as JSONL text.
    pub async fn journal(&self, session: &str) -> Result<String, ClientError> {
        let resp = self.request(Method::GET, &Self::session_path(session, "journal")).send().await?;
        Ok(Self::checked(resp).await?.text().await?)
    }

    /// Subscribes to state changes. The first message is always a snapshot.
    pub async fn stream(
        &self,
        session: &str,
    ) -> Result<BoxStream<'static, Result<StreamMessage, ClientError>>, ClientError> {
        let resp = self
            .request(Method::GET, &Self::session_path(session, "stream"))
            .header("accept", "text/event-stream")
            .send()
            .await?;
        let bytes = Self::checked(resp).await?.bytes_stream();
        let state = (bytes.boxed(), Vec::<u8>::new());
        Ok(stream::unfold(state, |(mut bytes, mut buf)| async move {
            loop {
                if let Some(end) = buf.windows(2).position(|w| w == b"\n\n") {
                    let block: Vec<u8> = buf.drain(..end + 2).collect();
                    match parse_block(&String::from_utf8_lossy(&block)) {
                        Ok(Some(msg)) => return Some((Ok(msg), (bytes, buf))),
                        Ok(None) => continue,
                        Err(e) => return Some((Err(e), (bytes, buf))),
                    }
                }
                match bytes.next().await? {
                    Ok(chunk) => buf.extend(chunk.iter().filter(|&&b| b != b'\r')),
                    Err(e) => return Some((Err(e.into()), (bytes, Vec::new()))),
                }
            }
        })
        .boxed())
    }
}

/// Parses one SSE block; comments and keep-alives yield `None`.
fn parse_block(block: &str) -> Result<Option<StreamMessage>, ClientError> {
    let mut name = "message";
    let mut data = String::new();
    for line in block.lines() {
        if let Some(v) = line.strip_prefix("event:") {
            name = v.trim();
        } else if let Some(v) = line.strip_prefix("data:") {
            if !data.is_empty() {
                data.push('\n');
            }
            data.push_str(v.strip_prefix(' ').unwrap_or(v));
        }
    }
    let bad = |e: &dyn std::fmt::Display| ClientError::Stream(format!("{name}: {e}"));
    Ok(match name {
        "snapshot" => Some(StreamMessage::Snapshot(serde_json::from_str(&data).map_err(|e| bad(&e))?)),
        "delta" => Some(StreamMessage::Delta(serde_json::from_str(&data).map_err(|e| bad(&e))?)),
        "lagged" => Some(StreamMessage::Lagged(data.trim().parse().map_err(|e| bad(&e))?)),
        _ => None,
    })
}
