use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CovarianceError;
use crate::fusion::OracleLabel;

/// Per-dimension affine map fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn identity(dims: usize) -> Self {
        Self {
            mean: vec![0.0; dims],
            std: vec![1.0; dims],
        }
    }

    /// Population statistics; constant columns get unit scale.
    pub fn fit(xs: &[Vec<f64>]) -> Self {
        let n = xs.len() as f64;
        let dims = xs[0].len();
        let mut mean = vec![0.0; dims];
        for x in xs {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; dims];
        for x in xs {
            for ((s, v), m) in std.iter_mut().zip(x).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in &mut std {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Self { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    /// City-block (L1) distance.
    Manhattan,
}

impl Metric {
    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| x - y);
        match self {
            Self::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Self::Manhattan => diffs.map(f64::abs).sum(),
        }
    }
}

fn yes() -> bool {
    true
}

/// What to train, with its hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    /// L2-regularized logistic regression by full-batch gradient descent at
    /// step `1/L`, `L` an upper bound on the loss curvature.
    LogisticRef {
        l2: f64,
        max_iter: usize,
        /// Stop once the gradient norm falls below this.
        tolerance: f64,
    },
    Knn {
        k: usize,
        #[serde(default)]
        metric: Metric,
        #[serde(default = "yes")]
        standardize: bool,
    },
    /// Highest cosine similarity to the class centroids wins.
    Ncc {
        #[serde(default = "yes")]
        standardize: bool,
    },
}

impl ClassifierSpec {
    pub fn logistic() -> Self {
        Self::LogisticRef {
            l2: 1e-3,
            max_iter: 20_000,
            tolerance: 1e-6,
        }
    }

    pub fn knn(k: usize) -> Self {
        Self::Knn {
            k,
            metric: Metric::Euclidean,
            standardize: true,
        }
    }

    pub fn ncc() -> Self {
        Self::Ncc { standardize: true }
    }

    pub fn name(&self) -> String {
        match self {
            Self::LogisticRef { .. } => "logistic".into(),
            Self::Knn { k, .. } => format!("knn{k}"),
            Self::Ncc { .. } => "ncc".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    LogisticRef {
        weights: Vec<f64>,
        bias: f64,
        /// Objective value after each iteration, starting from the zero model.
        loss_history: Vec<f64>,
    },
    Knn {
        k: usize,
        metric: Metric,
        points: Vec<Vec<f64>>,
        labels: Vec<OracleLabel>,
    },
    Ncc {
        positive: Vec<f64>,
        negative: Vec<f64>,
    },
}

/// A trained posterior estimator. Serializes as
/// `{kind, dims, standardization, ...parameters}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub dims: usize,
    pub standardization: Standardization,
    #[serde(flatten)]
    pub model: Model,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^{-m})` without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn train_classifier(
    spec: &ClassifierSpec,
    xs: &[Vec<f64>],
    labels: &[OracleLabel],
) -> Result<Classifier, CovarianceError> {
    if xs.is_empty() || xs.len() != labels.len() {
        return Err(CovarianceError::Training(format!(
            "{} examples with {} labels",
            xs.len(),
            labels.len()
        )));
    }
    let dims = xs[0].len();
    if dims == 0 || xs.iter().any(|x| x.len() != dims) {
        return Err(CovarianceError::Training("examples must share a nonzero dimension".into()));
    }
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CovarianceError::Training("non-finite feature value".into()));
    }
    let positives = labels.iter().filter(|&&l| l == OracleLabel::Present).count();
    if positives == 0 || positives == labels.len() {
        return Err(CovarianceError::Training("need at least one example of each class".into()));
    }

    let standardize = match spec {
        ClassifierSpec::LogisticRef { .. } => true,
        ClassifierSpec::Knn { standardize, .. } | ClassifierSpec::Ncc { standardize } => *standardize,
    };
    let standardization = if standardize {
        Standardization::fit(xs)
    } else {
        Standardization::identity(dims)
    };
    let zs: Vec<Vec<f64>> = xs.iter().map(|x| standardization.apply(x)).collect();

    let model = match *spec {
        ClassifierSpec::LogisticRef { l2, max_iter, tolerance } => fit_logistic(&zs, labels, l2, max_iter, tolerance)?,
        ClassifierSpec::Knn { k, metric, .. } => {
            if k == 0 {
                return Err(CovarianceError::Training("k must be at least 1".into()));
            }
            Model::Knn {
                k,
                metric,
                points: zs,
                labels: labels.to_vec(),
            }
        }
        ClassifierSpec::Ncc { .. } => {
            let centroid = |want: OracleLabel| {
                let members: Vec<&Vec<f64>> = zs.iter().zip(labels).filter(|(_, &l)| l == want).map(|(z, _)| z).collect();
                let n = members.len() as f64;
                (0..dims).map(|d| members.iter().map(|z| z[d]).sum::<f64>() / n).collect::<Vec<f64>>()
            };
            Model::Ncc {
                positive: centroid(OracleLabel::Present),
                negative: centroid(OracleLabel::Absent),
            }
        }
    };
    Ok(Classifier {
        dims,
        standardization,
        model,
    })
}

fn fit_logistic(
    zs: &[Vec<f64>],
    labels: &[OracleLabel],
    l2: f64,
    max_iter: usize,
    tolerance: f64,
) -> Result<Model, CovarianceError> {
    if !(l2 >= 0.0) || !(tolerance > 0.0) {
        return Err(CovarianceError::Training("l2 must be >= 0 and tolerance > 0".into()));
    }
    let n = zs.len() as f64;
    let dims = zs[0].len();
    let targets: Vec<f64> = labels.iter().map(|l| l.value()).collect();
    // Hessian ≤ ¼·E[x̃x̃ᵀ] + l2·I, whose top eigenvalue is at most its trace.
    let curvature = 0.25 * zs.iter().map(|z| 1.0 + z.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / n + l2;
    let step = 1.0 / curvature;

    let objective = |w: &[f64], b: f64| -> f64 {
        let data: f64 = zs
            .iter()
            .zip(&targets)
            .map(|(z, t)| log1p_exp_neg(t * (b + z.iter().zip(w).map(|(a, c)| a * c).sum::<f64>())))
            .sum::<f64>()
            / n;
        data + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
    };

    let mut w = vec![0.0; dims];
    let mut b = 0.0;
    let mut loss_history = vec![objective(&w, b)];
    for _ in 0..max_iter {
        let mut gw: Vec<f64> = w.iter().map(|v| l2 * v).collect();
        let mut gb = 0.0;
        for (z, t) in zs.iter().zip(&targets) {
            let margin = t * (b + z.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            let coef = -t * sigmoid(-margin) / n;
            gb += coef;
            for (g, v) in gw.iter_mut().zip(z) {
                *g += coef * v;
            }
        }
        let norm = (gb * gb + gw.iter().map(|g| g * g).sum::<f64>()).sqrt();
        if norm <= tolerance {
            break;
        }
        for (v, g) in w.iter_mut().zip(&gw) {
            *v -= step * g;
        }
        b -= step * gb;
        loss_history.push(objective(&w, b));
    }
    Ok(Model::LogisticRef {
        weights: w,
        bias: b,
        loss_history,
    })
}

impl Classifier {
    /// Estimated probability that `x` belongs to the positive class.
    pub fn posterior(&self, x: &[f64]) -> Result<f64, CovarianceError> {
        if x.len() != self.dims {
            return Err(CovarianceError::Shape(format!(
                "classifier expects {} features, got {}",
                self.dims,
                x.len()
            )));
        }
        let z = self.standardization.apply(x);
        Ok(match &self.model {
            Model::LogisticRef { weights, bias, .. } => {
                sigmoid(bias + z.iter().zip(weights).map(|(a, c)| a * c).sum::<f64>())
            }
            Model::Knn { k, metric, points, labels } => {
                let mut order: Vec<(f64, usize)> = points.iter().map(|p| metric.distance(&z, p)).zip(0..).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let k = (*k).min(points.len());
                let votes = order[..k].iter().filter(|(_, i)| labels[*i] == OracleLabel::Present).count();
                if 2 * votes == k {
                    // Even split: the single nearest neighbour decides.
                    if labels[order[0].1] == OracleLabel::Present {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    votes as f64 / k as f64
                }
            }
            Model::Ncc { positive, negative } => {
                if cosine(&z, positive) > cosine(&z, negative) {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }

    /// Binary verdict; `p = ½` maps to an alarm like `D = 0` does.
    pub fn classify(&self, x: &[f64]) -> Result<OracleLabel, CovarianceError> {
        Ok(if self.posterior(x)? >= 0.5 {
            OracleLabel::Present
        } else {
            OracleLabel::Absent
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CovarianceError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| CovarianceError::Shape(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CovarianceError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CovarianceError::Shape(format!("{}: {e}", path.display())))
    }
}
