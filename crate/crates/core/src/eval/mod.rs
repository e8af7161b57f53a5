//! Error metrics, method comparison on decision streams, and reports.

mod uci;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{Algorithm, FusionConfig, FusionError, FusionSession, OracleLabel};
use crate::stream::FusionEvent;

pub use uci::{load_uci, parse_uci, run_uci, ClassifierScore, UciConfig, UciDataset, UciReport, UCI_FEATURES, UCI_ROWS, UCI_TRAIN};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty error series")]
    Empty,
    #[error("normalizer must be >= 1, got {0}")]
    Normalizer(f64),
    #[error("event '{0}' has no ground truth")]
    MissingTruth(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Classifier(#[from] crate::covariance::CovarianceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `Ē = (1/F) Σ e_n / N` over `F` steps of squared error `e_n`.
pub fn avg_sq_error(errors: &[f64], normalizer: f64) -> Result<f64, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Empty);
    }
    if !(normalizer >= 1.0) {
        return Err(EvalError::Normalizer(normalizer));
    }
    Ok(errors.iter().map(|e| e / normalizer).sum::<f64>() / errors.len() as f64)
}

/// Consecutive sub-threshold steps required by [`convergence_step`].
pub const CONVERGENCE_RUN: usize = 10;

/// First index from which `|e|` stays below `0.1·max|e|` for
/// [`CONVERGENCE_RUN`] consecutive steps.
pub fn convergence_step(abs_errors: &[f64]) -> Option<usize> {
    let peak = abs_errors.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return (!abs_errors.is_empty()).then_some(0);
    }
    let threshold = 0.1 * peak;
    let mut run = 0;
    for (n, e) in abs_errors.iter().enumerate() {
        if *e < threshold {
            run += 1;
            if run == CONVERGENCE_RUN {
                return Some(n + 1 - CONVERGENCE_RUN);
            }
        } else {
            run = 0;
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackPolicy {
    Always,
    /// Oracle feedback only for steps `< k`.
    TrainThenFreeze(u64),
}

impl FeedbackPolicy {
    fn applies(self, index: u64) -> bool {
        match self {
            Self::Always => true,
            Self::TrainThenFreeze(k) => index < k,
        }
    }
}

impl FromStr for FeedbackPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "always" => Ok(Self::Always),
            other => other
                .strip_prefix("freeze:")
                .and_then(|k| k.parse().ok())
                .map(Self::TrainThenFreeze)
                .ok_or_else(|| format!("expected 'always' or 'freeze:<k>', got '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub avg_sq_error: f64,
    pub first_alarm_step: Option<u64>,
    pub convergence_step: Option<u64>,
    /// `e_n²` with `e_n = y_n − ŷ_n` before the update at step `n`.
    pub error_series: Vec<f64>,
    /// Weights in force after step `n`.
    pub weights_series: Vec<Vec<f64>>,
}

/// Runs one session over `events`. Feedback policy indices are positions in
/// `events`; reported steps are the events' own `step` values.
pub fn run_single(
    events: &[FusionEvent],
    config: &FusionConfig,
    policy: FeedbackPolicy,
) -> Result<RunMetrics, EvalError> {
    let first = events.first().ok_or(EvalError::Empty)?;
    let mut session = FusionSession::new(config.clone(), first.decisions.len())?;
    let mut sq = Vec::with_capacity(events.len());
    let mut abs = Vec::with_capacity(events.len());
    let mut weights_series = Vec::with_capacity(events.len());
    let mut first_alarm = None;
    let mut onset_seen = false;
    for (index, event) in events.iter().enumerate() {
        let truth = event.truth.ok_or_else(|| EvalError::MissingTruth(event.event_id.clone()))?;
        let target = policy.applies(index as u64).then_some(truth.value());
        let outcome = session.step(event.step, &event.decisions, target)?;
        let e = truth.value() - outcome.y_hat;
        sq.push(e * e);
        abs.push(e.abs());
        onset_seen |= truth == OracleLabel::Present;
        if onset_seen && first_alarm.is_none() && outcome.decision == OracleLabel::Present {
            first_alarm = Some(event.step);
        }
        weights_series.push(session.weights().as_slice().to_vec());
    }
    Ok(RunMetrics {
        avg_sq_error: avg_sq_error(&sq, 1.0)?,
        first_alarm_step: first_alarm,
        convergence_step: convergence_step(&abs).map(|n| events[n].step),
        error_series: sq,
        weights_series,
    })
}

/// One independent session per algorithm over the same events, run in
/// parallel.
pub fn run_comparison(
    events: &[FusionEvent],
    algorithms: &[Algorithm],
    base: &FusionConfig,
    policy: FeedbackPolicy,
) -> Result<BTreeMap<Algorithm, RunMetrics>, EvalError> {
    let runs: Vec<(Algorithm, Result<RunMetrics, EvalError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = algorithms
            .iter()
            .map(|&algorithm| {
                let cfg = FusionConfig {
                    algorithm,
                    ..base.clone()
                };
                (algorithm, scope.spawn(move || run_single(events, &cfg, policy)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(a, h)| (a, h.join().expect("comparison worker panicked")))
            .collect()
    });
    let mut out = BTreeMap::new();
    for (algorithm, result) in runs {
        out.insert(algorithm, result?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown report format '{other}'")),
        }
    }
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Json,
        }
    }
}

pub const CSV_HEADER: &str = "algorithm,avg_sq_error,first_alarm_step,convergence_step";

pub fn write_report<W: Write>(
    mut out: W,
    metrics: &BTreeMap<Algorithm, RunMetrics>,
    format: ReportFormat,
) -> Result<(), EvalError> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, metrics).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            let opt = |v: Option<u64>| v.map_or(String::new(), |s| s.to_string());
            for (algorithm, m) in metrics {
                writeln!(
                    out,
                    "{},{},{},{}",
                    algorithm.name(),
                    m.avg_sq_error,
                    opt(m.first_alarm_step),
                    opt(m.convergence_step)
                )?;
            }
        }
    }
    Ok(())
}

pub fn emit_report(
    metrics: &BTreeMap<Algorithm, RunMetrics>,
    path: &Path,
    format: ReportFormat,
) -> Result<(), EvalError> {
    let mut buf = Vec::new();
    write_report(&mut buf, metrics, format)?;
    std::fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::DecisionVector;

    #[test]
    fn average_examples() {
        assert_eq!(avg_sq_error(&[0.0, 0.0, 0.0], 1.0).unwrap(), 0.0);
        assert_eq!(avg_sq_error(&[1.0; 4], 1.0).unwrap(), 1.0);
        assert_eq!(avg_sq_error(&[4.0, 0.0], 2.0).unwrap(), 1.0);
        assert!(matches!(avg_sq_error(&[], 1.0), Err(EvalError::Empty)));
        assert!(avg_sq_error(&[1.0], 0.5).is_err());
    }

    #[test]
    fn convergence_needs_a_sustained_run() {
        let mut e = vec![1.0, 0.5];
        e.extend([0.01; 9]);
        e.push(0.2);
        e.extend([0.01; 10]);
        assert_eq!(convergence_step(&e), Some(12));
        assert_eq!(convergence_step(&[1.0; 30]), None);
        assert_eq!(convergence_step(&[0.0; 3]), Some(0));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("always".parse::<FeedbackPolicy>().unwrap(), FeedbackPolicy::Always);
        assert_eq!("freeze:125".parse::<FeedbackPolicy>().unwrap(), FeedbackPolicy::TrainThenFreeze(125));
        assert!("freeze:x".parse::<FeedbackPolicy>().is_err());
    }

    #[test]
    fn empty_metrics_give_header_only_csv() {
        let mut buf = Vec::new();
        write_report(&mut buf, &BTreeMap::new(), ReportFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn first_alarm_waits_for_onset() {
        let ev = |step, d: f64, y: i64| {
            FusionEvent::new("p", step, DecisionVector::new(vec![d]).unwrap(), Some(OracleLabel::from_sign(y).unwrap()))
        };
        // A false alarm before onset does not count.
        let events = vec![ev(0, 0.5, -1), ev(1, -0.5, -1), ev(2, -0.5, 1), ev(3, 0.5, 1)];
        let cfg = FusionConfig::with_algorithm(Algorithm::Fixed);
        let m = run_single(&events, &cfg, FeedbackPolicy::Always).unwrap();
        assert_eq!(m.first_alarm_step, Some(3));
        assert_eq!(m.error_series.len(), 4);
    }
}
