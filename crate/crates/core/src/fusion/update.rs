use super::bregman::{dot, solve_multiplier, Cost, EntropyCost};
use super::types::{
    Algorithm, DecisionVector, FusionConfig, FusionError, FusionUpdateResult, OracleLabel,
    UpdateStatus, WeightVector,
};

/// Equal weights `1/M`.
pub fn init_weights(m: usize) -> Result<WeightVector, FusionError> {
    if m == 0 {
        return Err(FusionError::EmptyVector);
    }
    Ok(WeightVector::from_raw(vec![1.0 / m as f64; m]))
}

fn check_dims(w: &WeightVector, d: &DecisionVector) -> Result<(), FusionError> {
    if w.len() != d.len() {
        return Err(FusionError::DimensionMismatch {
            expected: w.len(),
            actual: d.len(),
        });
    }
    Ok(())
}

/// Fused estimate `ŷ = Σ w_i D_i`.
pub fn predict(w: &WeightVector, d: &DecisionVector) -> Result<f64, FusionError> {
    check_dims(w, d)?;
    Ok(dot(w.as_slice(), d.as_slice()))
}

pub fn decide(y_hat: f64) -> OracleLabel {
    if y_hat >= 0.0 {
        OracleLabel::Present
    } else {
        OracleLabel::Absent
    }
}

fn check_target(y: f64) -> Result<(), FusionError> {
    if y.is_finite() {
        Ok(())
    } else {
        Err(FusionError::NonFinite { index: 0, value: y })
    }
}

fn skipped(w: &WeightVector, y_hat: f64, y: f64) -> FusionUpdateResult {
    FusionUpdateResult {
        new_weights: w.clone(),
        prediction_before: y_hat,
        error_before: y - y_hat,
        lambda: None,
        residual_after: (y - y_hat).abs(),
        status: UpdateStatus::Skipped,
    }
}

/// Relaxed orthogonal projection onto `D·w = y`:
/// `w' = w + μ e D / ||D||²`.
///
/// The reported `lambda` is the step coefficient `μ e / ||D||²`.
pub fn pocs_update(
    w: &WeightVector,
    d: &DecisionVector,
    y: f64,
    cfg: &FusionConfig,
) -> Result<FusionUpdateResult, FusionError> {
    check_target(y)?;
    let y_hat = predict(w, d)?;
    let norm_sq = d.norm_sq();
    if norm_sq == 0.0 {
        return Ok(skipped(w, y_hat, y));
    }
    let error = y - y_hat;
    let step = cfg.mu * (error / norm_sq);
    let new: Vec<f64> = w
        .as_slice()
        .iter()
        .zip(d.as_slice())
        .map(|(&wi, &di)| wi + step * di)
        .collect();
    let new = WeightVector::new(new)?;
    let residual = (dot(new.as_slice(), d.as_slice()) - y).abs();
    let status = if residual <= cfg.root_tolerance {
        UpdateStatus::Exact
    } else {
        UpdateStatus::Approximate
    };
    Ok(FusionUpdateResult {
        new_weights: new,
        prediction_before: y_hat,
        error_before: error,
        lambda: Some(step),
        residual_after: residual,
        status,
    })
}

/// Bregman projection of `w` onto `D·w' = y` under the chosen cost.
///
/// For [`Cost::Euclidean`] the multiplier is the Lagrange multiplier of the
/// orthogonal projection (`2e/||D||²`); for [`Cost::Entropy`] it is the
/// exponent of the multiplicative update.
pub fn bregman_project(
    w: &WeightVector,
    d: &DecisionVector,
    y: f64,
    cost: Cost,
    cfg: &FusionConfig,
) -> Result<FusionUpdateResult, FusionError> {
    check_target(y)?;
    let y_hat = predict(w, d)?;
    let functional = cost.functional();
    functional.check_domain(w.as_slice())?;
    if d.is_zero() {
        return Ok(skipped(w, y_hat, y));
    }
    let solution = solve_multiplier(functional, w.as_slice(), d.as_slice(), y, cfg)?;
    Ok(FusionUpdateResult {
        new_weights: WeightVector::new(solution.weights)?,
        prediction_before: y_hat,
        error_before: y - y_hat,
        lambda: Some(solution.lambda),
        residual_after: solution.residual,
        status: solution.status,
    })
}

/// Entropic projection: `w'_i = w_i e^{λ D_i}` with `λ` chosen so that
/// `D·w' = y`.
pub fn eadf_update(
    w: &WeightVector,
    d: &DecisionVector,
    y: f64,
    cfg: &FusionConfig,
) -> Result<FusionUpdateResult, FusionError> {
    check_target(y)?;
    let y_hat = predict(w, d)?;
    use super::bregman::CostFunctional;
    EntropyCost.check_domain(w.as_slice())?;
    if d.is_zero() {
        return Ok(skipped(w, y_hat, y));
    }
    let solution = solve_multiplier(&EntropyCost, w.as_slice(), d.as_slice(), y, cfg)?;
    Ok(FusionUpdateResult {
        new_weights: WeightVector::new(solution.weights)?,
        prediction_before: y_hat,
        error_before: y - y_hat,
        lambda: Some(solution.lambda),
        residual_after: solution.residual,
        status: solution.status,
    })
}

/// Universal linear predictor weights from the current sample only:
/// `v_i ∝ exp(-(y - D_i)² / 2c)`.
pub fn ulp_update(
    w: &WeightVector,
    d: &DecisionVector,
    y: f64,
    cfg: &FusionConfig,
) -> Result<FusionUpdateResult, FusionError> {
    check_target(y)?;
    let y_hat = predict(w, d)?;
    let scores: Vec<f64> = d
        .as_slice()
        .iter()
        .map(|&di| -(y - di).powi(2) / (2.0 * cfg.c))
        .collect();
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    let new = WeightVector::new(exps.into_iter().map(|e| e / total).collect())?;
    let residual = (dot(new.as_slice(), d.as_slice()) - y).abs();
    Ok(FusionUpdateResult {
        new_weights: new,
        prediction_before: y_hat,
        error_before: y - y_hat,
        lambda: None,
        residual_after: residual,
        status: UpdateStatus::Approximate,
    })
}

/// Applies the update rule selected by `cfg.algorithm`.
pub fn apply_update(
    w: &WeightVector,
    d: &DecisionVector,
    y: f64,
    cfg: &FusionConfig,
) -> Result<FusionUpdateResult, FusionError> {
    match cfg.algorithm {
        Algorithm::Eadf => eadf_update(w, d, y, cfg),
        Algorithm::Pocs => pocs_update(w, d, y, cfg),
        Algorithm::Ulp => ulp_update(w, d, y, cfg),
        Algorithm::Fixed => {
            check_target(y)?;
            let y_hat = predict(w, d)?;
            Ok(skipped(w, y_hat, y))
        }
    }
}
