//! Per-preset feedback sessions.
//!
//! A session owns one fusion state, a FIFO of events waiting for a human
//! verdict, and an append-only journal. Every state change is journalled, so
//! replaying the journal into a fresh session reproduces the weights exactly.

pub mod api;
mod journal;

use std::collections::{HashMap, VecDeque};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{
    DecisionVector, FusionConfig, FusionError, FusionSession, FusionUpdateResult, HistoryEntry, OracleLabel,
};
use crate::stream::{FusionEvent, StreamRng};

pub use journal::{append_journal, load_journal, replay_journal, JournalEntry};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error("session '{0}' already exists")]
    SessionExists(String),
    #[error("unknown event '{0}'")]
    UnknownEvent(String),
    #[error("event '{0}' is not awaiting feedback")]
    NotPending(String),
    #[error("event '{0}' already resolved")]
    AlreadyResolved(String),
    #[error("event '{0}' expired before feedback arrived")]
    Expired(String),
    #[error("event '{0}' already submitted")]
    DuplicateEvent(String),
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error("journal line {line}: {message}")]
    Journal { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl OracleError {
    /// HTTP status the service answers with.
    pub fn status_code(&self) -> u16 {
        match self {
            Self::UnknownSession(_) | Self::UnknownEvent(_) => 404,
            Self::SessionExists(_)
            | Self::NotPending(_)
            | Self::AlreadyResolved(_)
            | Self::Expired(_)
            | Self::DuplicateEvent(_) => 409,
            Self::Validation(_) => 422,
            Self::Fusion(FusionError::RootNotConverged { .. }) => 500,
            Self::Fusion(_) => 422,
            Self::Journal { .. } | Self::Io(_) => 500,
        }
    }
}

/// Where verdicts come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleMode {
    /// Every event carrying a truth label is answered with it at once.
    GroundTruth,
    /// Truth flipped with probability `p_flip`.
    Noisy { p_flip: f64 },
    /// Alarms and flagged events wait for an API verdict.
    Human,
    /// Truth for the first `k` events of the session, then nothing.
    Intermittent { k: u64 },
}

impl OracleMode {
    pub fn validate(&self) -> Result<(), OracleError> {
        match *self {
            Self::Noisy { p_flip } if !(0.0..=0.5).contains(&p_flip) => Err(OracleError::Validation(format!(
                "p_flip must lie in [0, 0.5], got {p_flip}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSource {
    Human,
    GroundTruth,
    NoisyOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub event_id: String,
    pub label: OracleLabel,
    pub source: FeedbackSource,
    pub timestamp: DateTime<Utc>,
}

fn default_mode() -> OracleMode {
    OracleMode::Human
}

/// Everything needed to rebuild a session from scratch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub session_id: String,
    #[serde(default)]
    pub config: FusionConfig,
    #[serde(default = "default_mode")]
    pub oracle_mode: OracleMode,
    /// Number of sub-detectors `M`.
    pub dimension: usize,
    /// Pending verdicts older than this are expired; `None` waits forever.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_ttl_ms: Option<u64>,
    /// Seed for the noisy oracle's flips.
    #[serde(default)]
    pub noise_seed: u64,
}

impl SessionSpec {
    pub fn new(session_id: impl Into<String>, config: FusionConfig, oracle_mode: OracleMode, dimension: usize) -> Self {
        Self {
            session_id: session_id.into(),
            config,
            oracle_mode,
            dimension,
            pending_ttl_ms: None,
            noise_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.session_id.is_empty() || self.session_id.contains(['/', '\\']) || self.session_id.starts_with('.') {
            return Err(OracleError::Validation(format!("invalid session id '{}'", self.session_id)));
        }
        if self.dimension == 0 {
            return Err(OracleError::Validation("dimension must be at least 1".into()));
        }
        self.config.validate()?;
        self.oracle_mode.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingEvent {
    pub event: FusionEvent,
    pub y_hat: f64,
    pub decision: OracleLabel,
    pub submitted_at: DateTime<Utc>,
}

/// Console-facing view of a pending event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingSummary {
    pub event_id: String,
    pub step: u64,
    pub decisions: DecisionVector,
    pub y_hat: f64,
    pub decision: OracleLabel,
    #[serde(default)]
    pub flagged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_ref: Option<String>,
    pub submitted_at: DateTime<Utc>,
}

impl From<&PendingEvent> for PendingSummary {
    fn from(p: &PendingEvent) -> Self {
        Self {
            event_id: p.event.event_id.clone(),
            step: p.event.step,
            decisions: p.event.decisions.clone(),
            y_hat: p.y_hat,
            decision: p.decision,
            flagged: p.event.flagged,
            region_ref: p.event.region_ref.clone(),
            submitted_at: p.submitted_at,
        }
    }
}

/// Result of submitting one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub event_id: String,
    pub decision: OracleLabel,
    pub y_hat: f64,
    /// Queued for a human verdict.
    pub pending: bool,
    /// Update applied inline by a simulated oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update: Option<FusionUpdateResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionCounts {
    pub submitted: u64,
    pub resolved: u64,
    pub pending: u64,
    pub expired: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub config: FusionConfig,
    pub oracle_mode: OracleMode,
    pub dimension: usize,
    /// Bumped on every state change.
    pub version: u64,
    pub weights: Vec<f64>,
    /// Total number of applied updates; `history` may be a suffix.
    pub history_len: usize,
    pub history: Vec<HistoryEntry>,
    pub feedback_log: Vec<FeedbackRecord>,
    pub pending: Vec<PendingSummary>,
    pub counts: SessionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub algorithm: crate::fusion::Algorithm,
    pub oracle_mode: OracleMode,
    pub dimension: usize,
    pub version: u64,
    pub counts: SessionCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Pending,
    Resolved,
    Expired,
    /// Decided without any verdict requested.
    Unreviewed,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    spec: SessionSpec,
    fusion: FusionSession,
    pending: VecDeque<PendingEvent>,
    fates: HashMap<String, Fate>,
    feedback_log: Vec<FeedbackRecord>,
    counts: SessionCounts,
    rng: StreamRng,
    journal: Vec<JournalEntry>,
    flushed: usize,
    version: u64,
}

impl SessionState {
    pub fn new(spec: SessionSpec, now: DateTime<Utc>) -> Result<Self, OracleError> {
        spec.validate()?;
        let fusion = FusionSession::new(spec.config.clone(), spec.dimension)?;
        Ok(Self {
            rng: StreamRng::new(spec.noise_seed),
            journal: vec![JournalEntry::Header {
                spec: spec.clone(),
                created_at: now,
            }],
            spec,
            fusion,
            pending: VecDeque::new(),
            fates: HashMap::new(),
            feedback_log: Vec::new(),
            counts: SessionCounts::default(),
            flushed: 0,
            version: 0,
        })
    }

    pub fn spec(&self) -> &SessionSpec {
        &self.spec
    }

    pub fn session_id(&self) -> &str {
        &self.spec.session_id
    }

    pub fn weights(&self) -> &[f64] {
        self.fusion.weights().as_slice()
    }

    pub fn history(&self) -> &[HistoryEntry] {
        self.fusion.history()
    }

    pub fn feedback_log(&self) -> &[FeedbackRecord] {
        &self.feedback_log
    }

    pub fn pending(&self) -> impl Iterator<Item = &PendingEvent> {
        self.pending.iter()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn counts(&self) -> SessionCounts {
        SessionCounts {
            pending: self.pending.len() as u64,
            ..self.counts
        }
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    /// Journal entries not yet handed out by a previous call.
    pub fn take_unflushed(&mut self) -> Vec<JournalEntry> {
        let fresh = self.journal[self.flushed..].to_vec();
        self.flushed = self.journal.len();
        fresh
    }

    /// Fuses the event, then routes it according to the oracle mode.
    pub fn submit_event(&mut self, event: FusionEvent, now: DateTime<Utc>) -> Result<Submission, OracleError> {
        self.expire(now);
        if event.decisions.len() != self.spec.dimension {
            return Err(FusionError::DimensionMismatch {
                expected: self.spec.dimension,
                actual: event.decisions.len(),
            }
            .into());
        }
        if event.event_id.is_empty() {
            return Err(OracleError::Validation("event_id must not be empty".into()));
        }
        if self.fates.contains_key(&event.event_id) {
            return Err(OracleError::DuplicateEvent(event.event_id));
        }
        let (y_hat, decision) = self.fusion.evaluate(&event.decisions)?;
        let verdict = self.simulated_verdict(&event);
        let pending = self.spec.oracle_mode == OracleMode::Human && (decision == OracleLabel::Present || event.flagged);

        self.record_event(event.clone(), y_hat, decision, pending, now);
        let update = match verdict {
            Some((label, source)) => {
                let update = self.resolve(&event.event_id, event.step, &event.decisions, label, source, now)?;
                self.journal.push(JournalEntry::Feedback(self.feedback_log.last().cloned().expect("just logged")));
                Some(update)
            }
            None => None,
        };
        Ok(Submission {
            event_id: event.event_id,
            decision,
            y_hat,
            pending,
            update,
        })
    }

    /// Human verdict for a pending event.
    pub fn apply_feedback(
        &mut self,
        event_id: &str,
        label: OracleLabel,
        now: DateTime<Utc>,
    ) -> Result<FusionUpdateResult, OracleError> {
        self.expire(now);
        self.check_pending(event_id)?;
        let at = self.pending.iter().position(|p| p.event.event_id == event_id).expect("pending fate implies queued");
        let entry = self.pending.remove(at).expect("index in range");
        let update = self.resolve(event_id, entry.event.step, &entry.event.decisions, label, FeedbackSource::Human, now)?;
        self.journal.push(JournalEntry::Feedback(self.feedback_log.last().cloned().expect("just logged")));
        Ok(update)
    }

    /// Drops pending events older than the TTL; returns their ids.
    pub fn expire(&mut self, now: DateTime<Utc>) -> Vec<String> {
        let Some(ttl) = self.spec.pending_ttl_ms else {
            return Vec::new();
        };
        let ttl = Duration::milliseconds(ttl.min(i64::MAX as u64) as i64);
        let mut gone = Vec::new();
        while let Some(front) = self.pending.front() {
            if front.submitted_at + ttl > now {
                break;
            }
            let id = front.event.event_id.clone();
            self.pending.pop_front();
            self.mark_expired(&id);
            self.journal.push(JournalEntry::Expired {
                event_id: id.clone(),
                at: now,
            });
            gone.push(id);
        }
        gone
    }

    /// Weights plus the last `last` history and feedback entries (all when `None`).
    pub fn snapshot(&self, last: Option<usize>) -> SessionSnapshot {
        fn tail<T: Clone>(v: &[T], n: Option<usize>) -> Vec<T> {
            v[v.len() - n.unwrap_or(v.len()).min(v.len())..].to_vec()
        }
        SessionSnapshot {
            session_id: self.spec.session_id.clone(),
            config: self.spec.config.clone(),
            oracle_mode: self.spec.oracle_mode,
            dimension: self.spec.dimension,
            version: self.version,
            weights: self.weights().to_vec(),
            history_len: self.history().len(),
            history: tail(self.history(), last),
            feedback_log: tail(&self.feedback_log, last),
            pending: self.pending.iter().map(PendingSummary::from).collect(),
            counts: self.counts(),
        }
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.spec.session_id.clone(),
            algorithm: self.spec.config.algorithm,
            oracle_mode: self.spec.oracle_mode,
            dimension: self.spec.dimension,
            version: self.version,
            counts: self.counts(),
        }
    }

    fn simulated_verdict(&mut self, event: &FusionEvent) -> Option<(OracleLabel, FeedbackSource)> {
        let index = self.counts.submitted;
        match self.spec.oracle_mode {
            OracleMode::Human => None,
            OracleMode::GroundTruth => event.truth.map(|t| (t, FeedbackSource::GroundTruth)),
            OracleMode::Intermittent { k } => event.truth.filter(|_| index < k).map(|t| (t, FeedbackSource::GroundTruth)),
            OracleMode::Noisy { p_flip } => event.truth.map(|t| {
                let label = if self.rng.uniform() < p_flip { t.flipped() } else { t };
                (label, FeedbackSource::NoisyOracle)
            }),
        }
    }

    fn record_event(&mut self, event: FusionEvent, y_hat: f64, decision: OracleLabel, pending: bool, now: DateTime<Utc>) {
        self.counts.submitted += 1;
        self.version += 1;
        let fate = if pending { Fate::Pending } else { Fate::Unreviewed };
        self.fates.insert(event.event_id.clone(), fate);
        self.journal.push(JournalEntry::Event {
            event: event.clone(),
            y_hat,
            decision,
            pending,
            at: now,
        });
        if pending {
            self.pending.push_back(PendingEvent {
                event,
                y_hat,
                decision,
                submitted_at: now,
            });
        }
    }

    fn check_pending(&self, event_id: &str) -> Result<(), OracleError> {
        match self.fates.get(event_id) {
            None => Err(OracleError::UnknownEvent(event_id.into())),
            Some(Fate::Pending) => Ok(()),
            Some(Fate::Resolved) => Err(OracleError::AlreadyResolved(event_id.into())),
            Some(Fate::Expired) => Err(OracleError::Expired(event_id.into())),
            Some(Fate::Unreviewed) => Err(OracleError::NotPending(event_id.into())),
        }
    }

    fn mark_expired(&mut self, event_id: &str) {
        self.fates.insert(event_id.into(), Fate::Expired);
        self.counts.expired += 1;
        self.version += 1;
    }

    /// Runs the configured update and logs the verdict. The caller journals it.
    fn resolve(
        &mut self,
        event_id: &str,
        step: u64,
        decisions: &DecisionVector,
        label: OracleLabel,
        source: FeedbackSource,
        at: DateTime<Utc>,
    ) -> Result<FusionUpdateResult, OracleError> {
        let update = self.fusion.feedback(step, decisions, label.value())?;
        self.fates.insert(event_id.into(), Fate::Resolved);
        self.feedback_log.push(FeedbackRecord {
            event_id: event_id.into(),
            label,
            source,
            timestamp: at,
        });
        self.counts.resolved += 1;
        self.version += 1;
        Ok(update)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::Algorithm;

    fn t0() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    fn session(mode: OracleMode, m: usize) -> SessionState {
        SessionState::new(SessionSpec::new("cam", FusionConfig::default(), mode, m), t0()).unwrap()
    }

    fn event(step: u64, d: &[f64], truth: Option<i64>) -> FusionEvent {
        FusionEvent::new(
            "cam",
            step,
            DecisionVector::new(d.to_vec()).unwrap(),
            truth.map(|t| OracleLabel::from_sign(t).unwrap()),
        )
    }

    #[test]
    fn fresh_session_is_uniform_and_empty() {
        let s = session(OracleMode::Human, 4);
        let snap = s.snapshot(None);
        assert_eq!(snap.weights, vec![0.25; 4]);
        assert!(snap.history.is_empty() && snap.pending.is_empty());
        assert_eq!(snap.version, 0);
    }

    #[test]
    fn ground_truth_answers_every_labelled_event() {
        let mut s = session(OracleMode::GroundTruth, 2);
        for n in 0..5 {
            let sub = s.submit_event(event(n, &[1.0, -0.5], Some(if n % 2 == 0 { 1 } else { -1 })), t0()).unwrap();
            assert!(sub.update.is_some() && !sub.pending);
        }
        assert_eq!(s.history().len(), 5);
        assert!(s.feedback_log().iter().all(|f| f.source == FeedbackSource::GroundTruth));
        let unlabelled = s.submit_event(event(9, &[1.0, 1.0], None), t0()).unwrap();
        assert!(unlabelled.update.is_none());
    }

    #[test]
    fn human_mode_queues_only_alarms_and_flags() {
        let mut s = session(OracleMode::Human, 2);
        let quiet = s.submit_event(event(0, &[-1.0, -0.2], Some(-1)), t0()).unwrap();
        assert_eq!(quiet.decision, OracleLabel::Absent);
        assert!(!quiet.pending);
        let alarm = s.submit_event(event(1, &[1.0, 0.2], None), t0()).unwrap();
        assert!(alarm.pending);
        let mut flagged = event(2, &[-1.0, -1.0], None);
        flagged.flagged = true;
        assert!(s.submit_event(flagged, t0()).unwrap().pending);
        let ids: Vec<_> = s.pending().map(|p| p.event.event_id.clone()).collect();
        assert_eq!(ids, ["cam-000001", "cam-000002"]);
        assert!(matches!(s.apply_feedback("cam-000000", OracleLabel::Absent, t0()), Err(OracleError::NotPending(_))));
    }

    #[test]
    fn rejected_false_alarm_lowers_positive_voters() {
        let mut s = session(OracleMode::Human, 3);
        s.submit_event(event(0, &[1.0, 0.8, -1.0], None), t0()).unwrap();
        let before = s.weights().to_vec();
        let up = s.apply_feedback("cam-000000", OracleLabel::Absent, t0()).unwrap();
        assert!(up.lambda.unwrap() < 0.0);
        assert!(up.new_weights.as_slice()[0] < before[0]);
        assert!(up.new_weights.as_slice()[1] < before[1]);
        assert!(up.new_weights.as_slice()[2] > before[2]);
        let snap = s.snapshot(None);
        assert_eq!(snap.history_len, 1);
        assert_eq!(snap.weights, up.new_weights.as_slice());
    }

    #[test]
    fn duplicate_feedback_conflicts_without_side_effects() {
        let mut s = session(OracleMode::Human, 2);
        s.submit_event(event(0, &[1.0, 0.5], None), t0()).unwrap();
        s.apply_feedback("cam-000000", OracleLabel::Present, t0()).unwrap();
        let before = s.snapshot(None);
        let err = s.apply_feedback("cam-000000", OracleLabel::Absent, t0()).unwrap_err();
        assert!(matches!(err, OracleError::AlreadyResolved(_)));
        assert_eq!(err.status_code(), 409);
        assert_eq!(s.snapshot(None), before);
        assert_eq!(s.apply_feedback("nope", OracleLabel::Absent, t0()).unwrap_err().status_code(), 404);
    }

    #[test]
    fn zero_error_feedback_keeps_weights() {
        let mut s = session(OracleMode::Human, 2);
        s.submit_event(event(0, &[1.0, 1.0], None), t0()).unwrap();
        let up = s.apply_feedback("cam-000000", OracleLabel::Present, t0()).unwrap();
        assert_eq!(up.new_weights.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn intermittent_freezes_after_k_events() {
        let mut s = session(OracleMode::Intermittent { k: 100 }, 2);
        for n in 0..100 {
            s.submit_event(event(n, &[1.0, -1.0], Some(1)), t0()).unwrap();
        }
        let frozen = s.weights().to_vec();
        let sub = s.submit_event(event(100, &[1.0, -1.0], Some(-1)), t0()).unwrap();
        assert!(sub.update.is_none());
        assert_eq!(s.weights(), frozen.as_slice());
    }

    #[test]
    fn noisy_oracle_flips_about_p_and_is_seeded() {
        let run = || {
            let mut spec = SessionSpec::new("n", FusionConfig::with_algorithm(Algorithm::Fixed), OracleMode::Noisy { p_flip: 0.3 }, 1);
            spec.noise_seed = 11;
            let mut s = SessionState::new(spec, t0()).unwrap();
            for n in 0..4000 {
                s.submit_event(event(n, &[0.5], Some(1)), t0()).unwrap();
            }
            s.feedback_log().iter().map(|f| f.label).collect::<Vec<_>>()
        };
        let labels = run();
        let flips = labels.iter().filter(|l| **l == OracleLabel::Absent).count() as f64 / labels.len() as f64;
        assert!((flips - 0.3).abs() < 0.03, "{flips}");
        assert_eq!(labels, run());
        assert!(OracleMode::Noisy { p_flip: 0.6 }.validate().is_err());
    }

    #[test]
    fn submit_validates_dimension_and_ids() {
        let mut s = session(OracleMode::Human, 2);
        let err = s.submit_event(event(0, &[1.0], None), t0()).unwrap_err();
        assert_eq!(err.status_code(), 422);
        s.submit_event(event(0, &[1.0, 1.0], None), t0()).unwrap();
        assert!(matches!(s.submit_event(event(0, &[1.0, 1.0], None), t0()), Err(OracleError::DuplicateEvent(_))));
        assert_eq!(s.counts().submitted, 1);
    }

    #[test]
    fn pending_events_expire_after_ttl() {
        let mut spec = SessionSpec::new("cam", FusionConfig::default(), OracleMode::Human, 1);
        spec.pending_ttl_ms = Some(1_000);
        let mut s = SessionState::new(spec, t0()).unwrap();
        s.submit_event(event(0, &[1.0], None), t0()).unwrap();
        s.submit_event(event(1, &[1.0], None), t0() + Duration::milliseconds(600)).unwrap();
        let later = t0() + Duration::milliseconds(1_200);
        assert_eq!(s.expire(later), ["cam-000000"]);
        assert!(matches!(s.apply_feedback("cam-000000", OracleLabel::Present, later), Err(OracleError::Expired(_))));
        s.apply_feedback("cam-000001", OracleLabel::Present, later).unwrap();
        let c = s.counts();
        // Conservation: every queued alarm is pending, resolved or expired.
        assert_eq!((c.pending, c.resolved, c.expired), (0, 1, 1));
    }

    #[test]
    fn snapshot_tail() {
        let mut s = session(OracleMode::GroundTruth, 2);
        for n in 0..6 {
            s.submit_event(event(n, &[0.9, -0.1], Some(-1)), t0()).unwrap();
        }
        let snap = s.snapshot(Some(2));
        assert_eq!(snap.history_len, 6);
        assert_eq!(snap.history.iter().map(|h| h.step).collect::<Vec<_>>(), [4, 5]);
        assert_eq!(snap.feedback_log.len(), 2);
        assert_eq!(s.snapshot(Some(100)).history.len(), 6);
    }

    #[test]
    fn spec_validation() {
        let bad = |f: fn(&mut SessionSpec)| {
            let mut spec = SessionSpec::new("ok", FusionConfig::default(), OracleMode::Human, 2);
            f(&mut spec);
            SessionState::new(spec, t0()).unwrap_err().status_code()
        };
        assert_eq!(bad(|s| s.dimension = 0), 422);
        assert_eq!(bad(|s| s.session_id = "../x".into()), 422);
        assert_eq!(bad(|s| s.config.mu = 3.0), 422);
    }
}
