//! Wire types shared by the HTTP service and its client.

use serde::{Deserialize, Serialize};

use super::{OracleMode, SessionCounts, SessionSpec};
use crate::fusion::{FusionConfig, HistoryEntry, OracleLabel};

/// `POST /sessions` body. Without a `session_id` the service picks one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default)]
    pub config: FusionConfig,
    #[serde(default = "super::default_mode")]
    pub oracle_mode: OracleMode,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_ttl_ms: Option<u64>,
    #[serde(default)]
    pub noise_seed: u64,
}

impl CreateSession {
    pub fn new(dimension: usize) -> Self {
        Self {
            session_id: None,
            config: FusionConfig::default(),
            oracle_mode: OracleMode::Human,
            dimension,
            pending_ttl_ms: None,
            noise_seed: 0,
        }
    }

    pub fn into_spec(self, session_id: String) -> SessionSpec {
        SessionSpec {
            session_id,
            config: self.config,
            oracle_mode: self.oracle_mode,
            dimension: self.dimension,
            pending_ttl_ms: self.pending_ttl_ms,
            noise_seed: self.noise_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub event_id: String,
    pub label: OracleLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub status: u16,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    Submitted,
    Resolved,
    Expired,
}

/// One state change, pushed to stream subscribers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDelta {
    pub version: u64,
    pub kind: DeltaKind,
    pub event_id: String,
    pub weights: Vec<f64>,
    /// Present when the change applied a weight update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_entry: Option<HistoryEntry>,
    pub counts: SessionCounts,
}
