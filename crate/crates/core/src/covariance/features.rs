use serde::{Deserialize, Serialize};

use super::image::ImageRegion;
use super::CovarianceError;

pub const FEATURE_DIM: usize = 9;
pub const REGION_FEATURE_LEN: usize = 42;

/// `[x1, x2, Y, U, V, |dY/dx1|, |dY/dx2|, |d²Y/dx1²|, |d²Y/dx2²|]`.
pub type PixelFeature = [f64; FEATURE_DIM];

/// Which pixels feed the covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorderPolicy {
    /// Skip the one-pixel frame whose filters would reach outside.
    #[default]
    InteriorOnly,
    /// Keep every pixel; filters read replicated edge samples.
    ReplicateEdge,
}

/// Per-pixel features, row-major. Border pixels are computed with edge
/// replication so that either policy can be applied afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub width: usize,
    pub height: usize,
    pub features: Vec<PixelFeature>,
}

impl FeatureGrid {
    pub fn at(&self, x1: usize, x2: usize) -> &PixelFeature {
        &self.features[x2 * self.width + x1]
    }

    /// Features admitted by `policy`, in row-major order.
    pub fn contributing(&self, policy: BorderPolicy) -> impl Iterator<Item = &PixelFeature> {
        let (w, h) = (self.width, self.height);
        self.features.iter().enumerate().filter_map(move |(k, f)| {
            let (c, r) = (k % w, k / w);
            let interior = c > 0 && r > 0 && c + 1 < w && r + 1 < h;
            (policy == BorderPolicy::ReplicateEdge || interior).then_some(f)
        })
    }
}

/// Raw `[-1 0 1]` and `[-1 2 -1]` filter responses on Y, in absolute value.
/// Coordinates are region-local.
pub fn pixel_features(region: &ImageRegion) -> FeatureGrid {
    let (w, h) = (region.width(), region.height());
    let mut features = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (cl, cr) = (c.saturating_sub(1), (c + 1).min(w - 1));
            let (ru, rd) = (r.saturating_sub(1), (r + 1).min(h - 1));
            let y = region.y_at(c, r);
            let (left, right) = (region.y_at(cl, r), region.y_at(cr, r));
            let (up, down) = (region.y_at(c, ru), region.y_at(c, rd));
            features.push([
                c as f64,
                r as f64,
                y,
                region.u_at(c, r),
                region.v_at(c, r),
                (right - left).abs(),
                (down - up).abs(),
                (-left + 2.0 * y - right).abs(),
                (-up + 2.0 * y - down).abs(),
            ]);
        }
    }
    FeatureGrid {
        width: w,
        height: h,
        features,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCovariance {
    pub c: [[f64; FEATURE_DIM]; FEATURE_DIM],
    pub n_px: usize,
}

/// One pass over the pixels accumulating `Σz` and `Σzzᵀ`, then
/// `C = (Σzzᵀ − ΣzΣzᵀ/n) / (n − 1)`.
pub fn region_covariance(grid: &FeatureGrid, policy: BorderPolicy) -> Result<RegionCovariance, CovarianceError> {
    let mut sum = [0.0; FEATURE_DIM];
    let mut prod = [[0.0; FEATURE_DIM]; FEATURE_DIM];
    let mut n = 0usize;
    for z in grid.contributing(policy) {
        n += 1;
        for i in 0..FEATURE_DIM {
            sum[i] += z[i];
            for j in 0..=i {
                prod[i][j] += z[i] * z[j];
            }
        }
    }
    if n < 2 {
        return Err(CovarianceError::TooFewPixels(n));
    }
    let nf = n as f64;
    let mut c = [[0.0; FEATURE_DIM]; FEATURE_DIM];
    for i in 0..FEATURE_DIM {
        for j in 0..=i {
            let v = (prod[i][j] - sum[i] * sum[j] / nf) / (nf - 1.0);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    Ok(RegionCovariance { c, n_px: n })
}

/// Lower triangle of `C`, row-major, without the coordinate block
/// `c(1,1), c(2,1), c(2,2)` (1-based). That block depends only on the region
/// shape, so it carries no information when regions share a size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RegionFeature(Vec<f64>);

impl RegionFeature {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for RegionFeature {
    type Error = CovarianceError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        if v.len() != REGION_FEATURE_LEN {
            return Err(CovarianceError::Shape(format!(
                "region feature needs {REGION_FEATURE_LEN} values, got {}",
                v.len()
            )));
        }
        Ok(Self(v))
    }
}

impl From<RegionFeature> for Vec<f64> {
    fn from(f: RegionFeature) -> Self {
        f.0
    }
}

pub fn region_feature(cov: &RegionCovariance) -> RegionFeature {
    let mut f = Vec::with_capacity(REGION_FEATURE_LEN);
    for i in 0..FEATURE_DIM {
        for j in 0..=i {
            if i < 2 {
                continue;
            }
            f.push(cov.c[i][j]);
        }
    }
    debug_assert_eq!(f.len(), REGION_FEATURE_LEN);
    RegionFeature(f)
}

/// Posterior → decision value `2p − 1`.
pub fn decision_d5(p: f64) -> Result<f64, CovarianceError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CovarianceError::Posterior(p));
    }
    Ok(2.0 * p - 1.0)
}

/// Convenience: region → 42-vector.
pub fn describe(region: &ImageRegion, policy: BorderPolicy) -> Result<RegionFeature, CovarianceError> {
    Ok(region_feature(&region_covariance(&pixel_features(region), policy)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> ImageRegion {
        let y = (0..h).flat_map(|r| (0..w).map(move |c| (c, r))).map(|(c, r)| f(c, r)).collect();
        ImageRegion::from_luma(w, h, y).unwrap()
    }

    #[test]
    fn constant_region_has_no_gradients() {
        let g = pixel_features(&region(5, 5, |_, _| 7.0));
        for z in g.contributing(BorderPolicy::InteriorOnly) {
            assert_eq!(&z[5..], &[0.0; 4]);
        }
    }

    #[test]
    fn ramp_gradients() {
        let g = pixel_features(&region(5, 5, |c, _| c as f64));
        for z in g.contributing(BorderPolicy::InteriorOnly) {
            assert_eq!((z[5], z[6], z[7], z[8]), (2.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn checkerboard_curvature() {
        // Unit checkerboard: -0 + 2·1 - 0 = 2 (and -1 + 0 - 1 = -2).
        let g = pixel_features(&region(6, 6, |c, r| ((c + r) % 2) as f64));
        for z in g.contributing(BorderPolicy::InteriorOnly) {
            assert_eq!((z[7], z[8]), (2.0, 2.0));
            assert_eq!((z[5], z[6]), (0.0, 0.0));
        }
        // A ±1 checkerboard doubles it.
        let g = pixel_features(&region(6, 6, |c, r| if (c + r) % 2 == 0 { 1.0 } else { -1.0 }));
        for z in g.contributing(BorderPolicy::InteriorOnly) {
            assert_eq!((z[7], z[8]), (4.0, 4.0));
        }
    }

    #[test]
    fn policy_changes_pixel_count() {
        let g = pixel_features(&region(5, 4, |c, r| (c * r) as f64));
        assert_eq!(region_covariance(&g, BorderPolicy::InteriorOnly).unwrap().n_px, 6);
        assert_eq!(region_covariance(&g, BorderPolicy::ReplicateEdge).unwrap().n_px, 20);
    }

    #[test]
    fn three_by_three_interior_is_one_pixel() {
        let g = pixel_features(&region(3, 3, |c, _| c as f64));
        assert!(matches!(
            region_covariance(&g, BorderPolicy::InteriorOnly),
            Err(CovarianceError::TooFewPixels(1))
        ));
    }

    #[test]
    fn feature_ordering() {
        let mut c = [[0.0; 9]; 9];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (10 * (i + 1) + j + 1) as f64;
            }
        }
        let f = region_feature(&RegionCovariance { c, n_px: 2 });
        assert_eq!(f.as_slice().len(), 42);
        assert_eq!(&f.as_slice()[..4], &[31.0, 32.0, 33.0, 41.0]);
        assert_eq!(*f.as_slice().last().unwrap(), 99.0);
    }

    #[test]
    fn d5_map() {
        assert_eq!(decision_d5(0.5).unwrap(), 0.0);
        assert_eq!(decision_d5(1.0).unwrap(), 1.0);
        assert_eq!(decision_d5(0.75).unwrap(), 0.5);
        assert_eq!(decision_d5(0.0).unwrap(), -1.0);
        assert!(decision_d5(1.01).is_err());
        assert!(decision_d5(f64::NAN).is_err());
    }
}
