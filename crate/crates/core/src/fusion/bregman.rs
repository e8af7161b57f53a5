//! Generalized (Bregman) projection of a weight vector onto the oracle
//! hyperplane `D·w = y`.
//!
//! For a separable convex cost `g(w) = Σ h(w_i)` the projection is
//! characterized by `∇g(w') = ∇g(w) + λD` together with `D·w' = y`. Each
//! coordinate of `w'` is therefore a monotone function of `λD_i`, and the
//! constraint `φ(λ) = Σ D_i w'_i(λ) = y` is nondecreasing in `λ`, which is
//! what the bracketing solver below relies on.

use serde::{Deserialize, Serialize};

use super::types::{FusionConfig, FusionError, Solver, UpdateStatus};

/// Largest admissible `|λ·D_i|` for exponential costs; `e^700` is still finite.
pub const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cost {
    /// `g(w) = Σ w_i log w_i`; the projection is the multiplicative update.
    Entropy,
    /// `g(w) = Σ w_i²`; the projection is the orthogonal one.
    Euclidean,
}

pub trait CostFunctional {
    /// Coordinate of the projected point: the `w'` with `h'(w') = h'(w) + t`.
    fn shifted(&self, w: f64, t: f64) -> f64;

    /// Derivative of [`Self::shifted`] with respect to `t`; nonnegative.
    fn shifted_slope(&self, w: f64, t: f64) -> f64;

    fn check_domain(&self, w: &[f64]) -> Result<(), FusionError>;

    /// Multiplier interval searched for a root given the decision vector.
    fn multiplier_range(&self, cfg: &FusionConfig, max_abs_d: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EntropyCost;

#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanCost;

impl CostFunctional for EntropyCost {
    fn shifted(&self, w: f64, t: f64) -> f64 {
        w * t.exp()
    }

    fn shifted_slope(&self, w: f64, t: f64) -> f64 {
        w * t.exp()
    }

    fn check_domain(&self, w: &[f64]) -> Result<(), FusionError> {
        match w.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            Some((index, &value)) => Err(FusionError::NonPositiveWeight { index, value }),
            None => Ok(()),
        }
    }

    fn multiplier_range(&self, cfg: &FusionConfig, max_abs_d: f64) -> (f64, f64) {
        let cap = if max_abs_d > 0.0 {
            MAX_EXPONENT / max_abs_d
        } else {
            f64::INFINITY
        };
        (cfg.lambda_min.max(-cap), cfg.lambda_max.min(cap))
    }
}

impl CostFunctional for EuclideanCost {
    fn shifted(&self, w: f64, t: f64) -> f64 {
        w + 0.5 * t
    }

    fn shifted_slope(&self, _w: f64, _t: f64) -> f64 {
        0.5
    }

    fn check_domain(&self, _w: &[f64]) -> Result<(), FusionError> {
        Ok(())
    }

    fn multiplier_range(&self, _cfg: &FusionConfig, _max_abs_d: f64) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

impl Cost {
    pub(crate) fn functional(self) -> &'static dyn CostFunctional {
        match self {
            Cost::Entropy => &EntropyCost,
            Cost::Euclidean => &EuclideanCost,
        }
    }
}

/// Outcome of the multiplier search.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub residual: f64,
    pub status: UpdateStatus,
}

struct Constraint<'a> {
    cost: &'a dyn CostFunctional,
    w: &'a [f64],
    d: &'a [f64],
    y: f64,
}

impl Constraint<'_> {
    fn weights_at(&self, lambda: f64) -> Vec<f64> {
        self.w
            .iter()
            .zip(self.d)
            .map(|(&w, &d)| self.cost.shifted(w, lambda * d))
            .collect()
    }

    /// `φ(λ) - y`.
    fn gap(&self, lambda: f64) -> f64 {
        self.w
            .iter()
            .zip(self.d)
            .map(|(&w, &d)| d * self.cost.shifted(w, lambda * d))
            .sum::<f64>()
            - self.y
    }

    fn slope(&self, lambda: f64) -> f64 {
        self.w
            .iter()
            .zip(self.d)
            .map(|(&w, &d)| d * d * self.cost.shifted_slope(w, lambda * d))
            .sum()
    }

    fn finish(&self, lambda: f64, status: UpdateStatus) -> Multiplier {
        let weights = self.weights_at(lambda);
        let residual = (dot(self.d, &weights) - self.y).abs();
        Multiplier {
            lambda,
            weights,
            residual,
            status,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Finds the multiplier placing the projected weights on `D·w' = y`.
///
/// The caller has already validated dimensions and the cost domain and has
/// excluded the all-zero decision vector.
pub fn solve_multiplier(
    cost: &dyn CostFunctional,
    w: &[f64],
    d: &[f64],
    y: f64,
    cfg: &FusionConfig,
) -> Result<Multiplier, FusionError> {
    let problem = Constraint { cost, w, d, y };
    let gap0 = problem.gap(0.0);
    if gap0.abs() <= cfg.root_tolerance {
        return Ok(problem.finish(0.0, UpdateStatus::Exact));
    }
    let max_abs_d = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let (lo, hi) = cost.multiplier_range(cfg, max_abs_d);
    match cfg.solver {
        Solver::RootFind => root_find(&problem, gap0, lo, hi, cfg),
        Solver::GridSearch => {
            let (lo, hi) = (lo.max(cfg.lambda_min), hi.min(cfg.lambda_max));
            Ok(grid_search(&problem, lo, hi, cfg))
        }
    }
}

/// Pulls a finite bound toward zero until the constraint evaluates finitely.
fn finite_bound(problem: &Constraint<'_>, mut bound: f64) -> f64 {
    while !problem.gap(bound).is_finite() && bound.abs() > f64::MIN_POSITIVE {
        bound *= 0.5;
    }
    bound
}

fn root_find(
    problem: &Constraint<'_>,
    gap0: f64,
    lo: f64,
    hi: f64,
    cfg: &FusionConfig,
) -> Result<Multiplier, FusionError> {
    // φ is nondecreasing: a negative gap at 0 puts the root at λ > 0.
    let limit = if gap0 < 0.0 { hi } else { lo };
    let far = if limit.is_finite() {
        let far = finite_bound(problem, limit);
        let gap_far = problem.gap(far);
        if gap_far.signum() == gap0.signum() && gap_far.abs() > cfg.root_tolerance {
            return Ok(problem.finish(far, UpdateStatus::Clamped));
        }
        far
    } else {
        let direction = limit.signum();
        let mut step = 1.0_f64;
        loop {
            let candidate = direction * step;
            let gap = problem.gap(candidate);
            if !gap.is_finite() {
                let prev = direction * step * 0.5;
                return Ok(problem.finish(prev, UpdateStatus::Clamped));
            }
            if gap.signum() != gap0.signum() || gap.abs() <= cfg.root_tolerance {
                break candidate;
            }
            step *= 2.0;
            if step > 1e300 {
                return Ok(problem.finish(candidate, UpdateStatus::Clamped));
            }
        }
    };

    if problem.gap(far).abs() <= cfg.root_tolerance {
        return Ok(problem.finish(far, UpdateStatus::Exact));
    }
    let (mut lower, mut upper) = if far > 0.0 { (0.0, far) } else { (far, 0.0) };
    let mut x = 0.0;
    let mut gap = gap0;
    for _ in 0..cfg.max_root_iterations {
        if gap.abs() <= cfg.root_tolerance {
            return Ok(problem.finish(x, UpdateStatus::Exact));
        }
        if gap < 0.0 {
            lower = x;
        } else {
            upper = x;
        }
        let slope = problem.slope(x);
        let newton = x - gap / slope;
        let next = if slope > 0.0 && newton >= lower && newton <= upper {
            newton
        } else {
            0.5 * (lower + upper)
        };
        if next == x || upper - lower <= f64::EPSILON * upper.abs().max(lower.abs()).max(1.0) {
            break;
        }
        x = next;
        gap = problem.gap(x);
    }
    if gap.abs() <= cfg.root_tolerance {
        Ok(problem.finish(x, UpdateStatus::Exact))
    } else {
        Err(FusionError::RootNotConverged { residual: gap.abs() })
    }
}

/// Scans `λ ∈ [lo, hi]` at the configured step and keeps the multiplier with
/// the smallest absolute residual. `λ = 0` (no update) is the starting point,
/// so a scan that finds no improvement leaves the weights untouched.
fn grid_search(problem: &Constraint<'_>, lo: f64, hi: f64, cfg: &FusionConfig) -> Multiplier {
    let step = cfg.lambda_grid_step;
    let count = ((hi - lo) / step + 1e-9).floor() as u64;
    let mut best_lambda = 0.0;
    let mut best_residual = problem.gap(0.0).abs();
    for k in 0..=count {
        let lambda = lo + k as f64 * step;
        let residual = problem.gap(lambda).abs();
        if residual < best_residual {
            best_residual = residual;
            best_lambda = lambda;
        }
    }
    let at_edge = best_lambda != 0.0
        && ((best_lambda - lo).abs() < 0.5 * step || (hi - best_lambda).abs() < 0.5 * step);
    let status = if best_residual <= cfg.root_tolerance {
        UpdateStatus::Exact
    } else if at_edge {
        UpdateStatus::Clamped
    } else {
        UpdateStatus::Approximate
    };
    problem.finish(best_lambda, status)
}
