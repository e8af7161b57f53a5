use serde::{Deserialize, Serialize};

use super::types::{
    Algorithm, DecisionVector, FusionConfig, FusionError, FusionUpdateResult, OracleLabel,
    UpdateStatus, WeightVector,
};
use super::update::{apply_update, decide, init_weights, predict};

/// One applied oracle update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: u64,
    /// Weights after the update.
    pub weights: WeightVector,
    pub y_hat: f64,
    pub error: f64,
    pub decision: OracleLabel,
    pub status: UpdateStatus,
}

/// A fusion stream driven one event at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSession {
    config: FusionConfig,
    weights: WeightVector,
    history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub y_hat: f64,
    pub decision: OracleLabel,
    pub update: Option<FusionUpdateResult>,
}

impl FusionSession {
    pub fn new(config: FusionConfig, dimension: usize) -> Result<Self, FusionError> {
        config.validate()?;
        Ok(Self {
            config,
            weights: init_weights(dimension)?,
            history: Vec::new(),
        })
    }

    pub fn with_weights(config: FusionConfig, weights: WeightVector) -> Result<Self, FusionError> {
        config.validate()?;
        Ok(Self {
            config,
            weights,
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &FusionConfig {
        &self.config
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    /// Fused estimate and decision with the current weights; no state change.
    pub fn evaluate(&self, decisions: &DecisionVector) -> Result<(f64, OracleLabel), FusionError> {
        let y_hat = predict(&self.weights, decisions)?;
        Ok((y_hat, decide(y_hat)))
    }

    /// Applies one update toward the hyperplane `D·w = target`.
    ///
    /// The target is normally an oracle label (`±1`); any finite value is
    /// accepted so that harnesses can drive convergence toward arbitrary
    /// hyperplane intersections. With the `Fixed` algorithm nothing changes
    /// and no history entry is written.
    pub fn feedback(
        &mut self,
        step: u64,
        decisions: &DecisionVector,
        target: f64,
    ) -> Result<FusionUpdateResult, FusionError> {
        let result = apply_update(&self.weights, decisions, target, &self.config)?;
        if self.config.algorithm != Algorithm::Fixed {
            self.weights = result.new_weights.clone();
            self.history.push(HistoryEntry {
                step,
                weights: result.new_weights.clone(),
                y_hat: result.prediction_before,
                error: result.error_before,
                decision: decide(result.prediction_before),
                status: result.status,
            });
        }
        Ok(result)
    }

    /// Decision for one event, followed by an update when a target is given.
    pub fn step(
        &mut self,
        step: u64,
        decisions: &DecisionVector,
        target: Option<f64>,
    ) -> Result<StepOutcome, FusionError> {
        let (y_hat, decision) = self.evaluate(decisions)?;
        let update = match target {
            Some(y) => Some(self.feedback(step, decisions, y)?),
            None => None,
        };
        Ok(StepOutcome {
            y_hat,
            decision,
            update,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DecisionVector {
        DecisionVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn fixed_weights_never_change() {
        let mut s = FusionSession::new(FusionConfig::with_algorithm(Algorithm::Fixed), 3).unwrap();
        for n in 0..20 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            s.step(n, &dv(&[sign, -sign, 0.3]), Some(-sign)).unwrap();
        }
        assert_eq!(s.weights().as_slice(), &[1.0 / 3.0; 3]);
        assert!(s.history().is_empty());
    }

    #[test]
    fn no_feedback_keeps_weights() {
        let mut s = FusionSession::new(FusionConfig::default(), 2).unwrap();
        let out = s.step(0, &dv(&[1.0, -0.2]), None).unwrap();
        assert!(out.update.is_none());
        assert_eq!(s.weights().as_slice(), &[0.5, 0.5]);
        assert!(s.history().is_empty());
    }

    #[test]
    fn eadf_repeated_constraint_is_stationary() {
        let mut s = FusionSession::new(FusionConfig::default(), 3).unwrap();
        let d = dv(&[0.9, -0.4, 0.2]);
        s.step(0, &d, Some(1.0)).unwrap();
        let after_first = s.weights().clone();
        for n in 1..10 {
            let out = s.step(n, &d, Some(1.0)).unwrap();
            let update = out.update.unwrap();
            assert!(update.error_before.abs() <= 1e-10);
            assert_eq!(update.lambda, Some(0.0));
        }
        assert_eq!(s.weights(), &after_first);
        assert_eq!(s.history().len(), 10);
    }

    #[test]
    fn pocs_alternating_hyperplanes_converge() {
        // Both hyperplanes pass through (0.6, 0.4).
        let mut s = FusionSession::new(FusionConfig::with_algorithm(Algorithm::Pocs), 2).unwrap();
        let a = dv(&[1.0, 0.5]);
        let b = dv(&[0.3, -0.8]);
        let ya = 0.6 + 0.5 * 0.4;
        let yb = 0.3 * 0.6 - 0.8 * 0.4;
        for n in 0..1000u64 {
            if n % 2 == 0 {
                s.step(n, &a, Some(ya)).unwrap();
            } else {
                s.step(n, &b, Some(yb)).unwrap();
            }
        }
        let w = s.weights();
        let ra = (predict(w, &a).unwrap() - ya).abs();
        let rb = (predict(w, &b).unwrap() - yb).abs();
        assert!(ra < 1e-6 && rb < 1e-6, "{ra} {rb}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut s = FusionSession::new(FusionConfig::default(), 3).unwrap();
        assert!(matches!(
            s.step(0, &dv(&[1.0]), Some(1.0)),
            Err(FusionError::DimensionMismatch { expected: 3, actual: 1 })
        ));
    }
}
