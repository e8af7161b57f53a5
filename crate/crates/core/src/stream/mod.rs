//! Synthetic concept-drift decision streams and recorded-stream I/O.
//!
//! Randomness comes from PCG-64 (`Lcg128Xsl64`, the `rand_pcg::Pcg64`
//! generator) seeded with `seed_from_u64`. Uniforms take the top 53 bits of
//! each 64-bit output; normals use the Box–Muller cosine branch on two
//! uniforms. Per step the draw order is fixed: one uniform for the truth,
//! then for every expert in order a magnitude uniform, a sign uniform and
//! two uniforms for the noise (drawn even when `σ = 0`), so streams are
//! reproducible bit-for-bit across platforms.

mod generate;
mod io;
pub mod reference;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{DecisionVector, OracleLabel};

pub use generate::{generate_stream, StreamRng};
pub use io::{load_stream, read_stream, save_stream, write_stream, StreamFormat};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("invalid stream config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected {expected} decisions, found {actual}")]
    Dimension {
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("duplicate event id '{event_id}' on line {line}")]
    DuplicateEvent { line: usize, event_id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Expert reliability as a function of the step index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccuracySchedule {
    Constant { value: f64 },
    /// `(start_step, accuracy)` pairs; each value holds from its start step
    /// until the next one. The first start must be 0.
    PiecewiseConstant { segments: Vec<(u64, f64)> },
    /// `(step, accuracy)` knots, linearly interpolated and held flat outside
    /// the first and last knot.
    PiecewiseLinear { knots: Vec<(u64, f64)> },
}

impl AccuracySchedule {
    pub fn at(&self, step: u64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::PiecewiseConstant { segments } => segments
                .iter()
                .take_while(|(start, _)| *start <= step)
                .last()
                .map_or(segments[0].1, |(_, a)| *a),
            Self::PiecewiseLinear { knots } => {
                let first = knots[0];
                if step <= first.0 {
                    return first.1;
                }
                for pair in knots.windows(2) {
                    let ((s0, a0), (s1, a1)) = (pair[0], pair[1]);
                    if step <= s1 {
                        let t = (step - s0) as f64 / (s1 - s0) as f64;
                        return a0 + t * (a1 - a0);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    fn validate(&self, expert: &str) -> Result<(), StreamError> {
        let bad = |m: &str| Err(StreamError::InvalidConfig(format!("expert '{expert}': {m}")));
        let points: Vec<(u64, f64)> = match self {
            Self::Constant { value } => vec![(0, *value)],
            Self::PiecewiseConstant { segments } => {
                if segments.first().map(|s| s.0) != Some(0) {
                    return bad("piecewise-constant schedule must start at step 0");
                }
                segments.clone()
            }
            Self::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise-linear schedule needs at least one knot");
                }
                knots.clone()
            }
        };
        if points.windows(2).any(|p| p[1].0 <= p[0].0) {
            return bad("schedule steps must be strictly increasing");
        }
        if points.iter().any(|(_, a)| !(0.0..=1.0).contains(a)) {
            return bad("accuracy must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertProfile {
    pub id: String,
    pub accuracy_schedule: AccuracySchedule,
    /// Standard deviation of the additive Gaussian noise.
    #[serde(default)]
    pub confidence_noise: f64,
    /// Half-open `[start, end)` step intervals with inverted sign.
    #[serde(default)]
    pub flip_episodes: Vec<(u64, u64)>,
}

impl ExpertProfile {
    pub fn constant(id: impl Into<String>, accuracy: f64, noise: f64) -> Self {
        Self {
            id: id.into(),
            accuracy_schedule: AccuracySchedule::Constant { value: accuracy },
            confidence_noise: noise,
            flip_episodes: Vec::new(),
        }
    }

    pub fn with_flips(mut self, episodes: &[(u64, u64)]) -> Self {
        self.flip_episodes = episodes.to_vec();
        self
    }

    pub fn flipped_at(&self, step: u64) -> bool {
        self.flip_episodes
            .iter()
            .filter(|(start, end)| (*start..*end).contains(&step))
            .count()
            % 2
            == 1
    }
}

fn default_preset() -> String {
    "default".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub experts: Vec<ExpertProfile>,
    pub length: u64,
    pub positive_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub drift_switch_steps: Vec<u64>,
    #[serde(default = "default_preset")]
    pub preset_id: String,
}

impl StreamConfig {
    pub fn dimension(&self) -> usize {
        self.experts.len()
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        let bad = |m: String| Err(StreamError::InvalidConfig(m));
        if self.experts.is_empty() {
            return bad("at least one expert is required".into());
        }
        if self.length == 0 {
            return bad("length must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.positive_rate) {
            return bad(format!("positive_rate must lie in [0, 1], got {}", self.positive_rate));
        }
        for e in &self.experts {
            e.accuracy_schedule.validate(&e.id)?;
            if !(e.confidence_noise >= 0.0 && e.confidence_noise.is_finite()) {
                return bad(format!("expert '{}': confidence_noise must be >= 0", e.id));
            }
            if e.flip_episodes.iter().any(|(s, t)| s >= t) {
                return bad(format!("expert '{}': flip episode with start >= end", e.id));
            }
        }
        Ok(())
    }
}

/// One time-step sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionEvent {
    pub event_id: String,
    pub step: u64,
    pub decisions: DecisionVector,
    #[serde(default)]
    pub truth: Option<OracleLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_ref: Option<String>,
    #[serde(default = "default_preset")]
    pub preset_id: String,
    /// Ask the human oracle to review even if no alarm is raised.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

impl FusionEvent {
    pub fn new(preset_id: &str, step: u64, decisions: DecisionVector, truth: Option<OracleLabel>) -> Self {
        Self {
            event_id: event_id(preset_id, step),
            step,
            decisions,
            truth,
            region_ref: None,
            preset_id: preset_id.to_string(),
            flagged: false,
        }
    }
}

pub fn event_id(preset_id: &str, step: u64) -> String {
    format!("{preset_id}-{step:06}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_evaluate() {
        let pc = AccuracySchedule::PiecewiseConstant {
            segments: vec![(0, 0.9), (100, 0.4)],
        };
        assert_eq!(pc.at(0), 0.9);
        assert_eq!(pc.at(99), 0.9);
        assert_eq!(pc.at(100), 0.4);
        let pl = AccuracySchedule::PiecewiseLinear {
            knots: vec![(10, 1.0), (20, 0.0)],
        };
        assert_eq!(pl.at(0), 1.0);
        assert_eq!(pl.at(15), 0.5);
        assert_eq!(pl.at(25), 0.0);
    }

    #[test]
    fn schedule_json_is_tagged() {
        let s: AccuracySchedule = serde_json::from_str(r#"{"kind":"constant","value":0.7}"#).unwrap();
        assert_eq!(s, AccuracySchedule::Constant { value: 0.7 });
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = StreamConfig {
            experts: vec![ExpertProfile::constant("a", 0.9, 0.0)],
            length: 10,
            positive_rate: 0.5,
            seed: 1,
            drift_switch_steps: vec![],
            preset_id: "p".into(),
        };
        assert!(cfg.validate().is_ok());
        cfg.positive_rate = 1.5;
        assert!(cfg.validate().is_err());
        cfg.positive_rate = 0.5;
        cfg.experts[0].accuracy_schedule = AccuracySchedule::Constant { value: -0.1 };
        assert!(cfg.validate().is_err());
        cfg.experts[0] = ExpertProfile::constant("a", 0.9, 0.0).with_flips(&[(5, 5)]);
        assert!(cfg.validate().is_err());
        cfg.experts.clear();
        assert!(cfg.validate().is_err());
    }
}
