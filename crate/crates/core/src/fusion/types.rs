use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("vector must have at least one component")]
    EmptyVector,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("entropy cost is only defined for positive weights (w[{index}] = {value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("oracle label must be -1 or 1, got {0}")]
    InvalidLabel(i64),
    #[error("multiplier search stalled with residual {residual:e}")]
    RootNotConverged { residual: f64 },
}

/// Confidences emitted by the M sub-detectors for one sample.
///
/// Values are clamped to `[-1, 1]` on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn new(values: Vec<f64>) -> Result<Self, FusionError> {
        if values.is_empty() {
            return Err(FusionError::EmptyVector);
        }
        let mut values = values;
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(FusionError::NonFinite { index, value: *v });
            }
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|d| d * d).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, d| m.max(d.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&d| d == 0.0)
    }
}

impl TryFrom<Vec<f64>> for DecisionVector {
    type Error = FusionError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<DecisionVector> for Vec<f64> {
    fn from(d: DecisionVector) -> Self {
        d.0
    }
}

/// Fusion weights. Finite; sign constraints depend on the update rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, FusionError> {
        if weights.is_empty() {
            return Err(FusionError::EmptyVector);
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite()) {
            return Err(FusionError::NonFinite { index, value });
        }
        Ok(Self(weights))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&w| w > 0.0)
    }

    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| w.is_finite()));
        Self(weights)
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = FusionError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Verdict of the oracle: `+1` event present, `-1` event absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OracleLabel {
    Absent,
    Present,
}

impl OracleLabel {
    pub fn from_sign(value: i64) -> Result<Self, FusionError> {
        match value {
            1 => Ok(Self::Present),
            -1 => Ok(Self::Absent),
            other => Err(FusionError::InvalidLabel(other)),
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Self::Present => 1,
            Self::Absent => -1,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.as_i8())
    }

    pub fn flipped(self) -> Self {
        match self {
            Self::Present => Self::Absent,
            Self::Absent => Self::Present,
        }
    }
}

impl From<OracleLabel> for f64 {
    fn from(label: OracleLabel) -> Self {
        label.value()
    }
}

impl fmt::Display for OracleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

impl Serialize for OracleLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for OracleLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        OracleLabel::from_sign(raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Eadf,
    Pocs,
    Ulp,
    Fixed,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Eadf, Self::Pocs, Self::Ulp, Self::Fixed];

    pub fn name(self) -> &'static str {
        match self {
            Self::Eadf => "EADF",
            Self::Pocs => "POCS",
            Self::Ulp => "ULP",
            Self::Fixed => "Fixed",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eadf" => Ok(Self::Eadf),
            "pocs" => Ok(Self::Pocs),
            "ulp" => Ok(Self::Ulp),
            "fixed" => Ok(Self::Fixed),
            other => Err(FusionError::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// How the entropic multiplier is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Bracketing bisection with Newton refinement on the monotone constraint.
    RootFind,
    /// Exhaustive scan of the multiplier range at a fixed step.
    GridSearch,
}

impl FromStr for Solver {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "root" | "root_find" | "rootfind" => Ok(Self::RootFind),
            "grid" | "grid_search" | "gridsearch" => Ok(Self::GridSearch),
            other => Err(FusionError::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub algorithm: Algorithm,
    /// Relaxation for the orthogonal projection, `0 < mu < 2`.
    pub mu: f64,
    /// ULP normalization constant.
    pub c: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_grid_step: f64,
    pub solver: Solver,
    pub root_tolerance: f64,
    pub max_root_iterations: u32,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Eadf,
            mu: 1.0,
            c: 4.0,
            lambda_min: -10.0,
            lambda_max: 10.0,
            lambda_grid_step: 0.01,
            solver: Solver::RootFind,
            root_tolerance: 1e-10,
            max_root_iterations: 200,
        }
    }
}

impl FusionConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        let bad = |msg: String| Err(FusionError::InvalidConfig(msg));
        if !(self.mu > 0.0 && self.mu < 2.0) {
            return bad(format!("mu must lie in (0, 2), got {}", self.mu));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive, got {}", self.c));
        }
        if !(self.lambda_min < 0.0 && self.lambda_max > 0.0) {
            return bad(format!(
                "lambda range must straddle zero, got [{}, {}]",
                self.lambda_min, self.lambda_max
            ));
        }
        if !(self.lambda_min.is_finite() && self.lambda_max.is_finite()) {
            return bad("lambda range must be finite".into());
        }
        if !(self.lambda_grid_step > 0.0 && self.lambda_grid_step.is_finite()) {
            return bad(format!("lambda_grid_step must be positive, got {}", self.lambda_grid_step));
        }
        if !(self.root_tolerance > 0.0) {
            return bad(format!("root_tolerance must be positive, got {}", self.root_tolerance));
        }
        if self.max_root_iterations == 0 {
            return bad("max_root_iterations must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateStatus {
    /// The new weights satisfy the oracle hyperplane to solver tolerance.
    Exact,
    /// An update was applied but the hyperplane is not met to tolerance
    /// (relaxed projection, grid resolution, or the ULP rule).
    Approximate,
    /// No multiplier inside the admissible range reaches the hyperplane; the
    /// bound nearest to it was used.
    Clamped,
    /// Weights left untouched.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionUpdateResult {
    pub new_weights: WeightVector,
    pub prediction_before: f64,
    pub error_before: f64,
    pub lambda: Option<f64>,
    pub residual_after: f64,
    pub status: UpdateStatus,
}
