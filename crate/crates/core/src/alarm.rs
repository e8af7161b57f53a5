//! Fused per-pixel decisions → cleaned mask → connected alarm regions.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covariance::{decode_pnm, encode_pgm, CovarianceError, ImageFormat};

/// Documented default; the source never states the value it used.
pub const DEFAULT_MIN_PIXELS: usize = 16;
pub const DEFAULT_KERNEL_RADIUS: usize = 1;

#[derive(Debug, Error)]
pub enum AlarmError {
    #[error("mask has {actual} pixels, expected {expected}")]
    Shape { expected: usize, actual: usize },
    #[error("min_pixels must be at least 1")]
    MinPixels,
    #[error(transparent)]
    Image(#[from] CovarianceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary mask, row-major; `true` where the fused decision is `≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionMap {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

impl DecisionMap {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self, AlarmError> {
        if mask.len() != width * height {
            return Err(AlarmError::Shape {
                expected: width * height,
                actual: mask.len(),
            });
        }
        Ok(Self { width, height, mask })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    /// Thresholds fused values `ŷ` at zero (inclusive).
    pub fn from_fused(width: usize, height: usize, y_hat: &[f64]) -> Result<Self, AlarmError> {
        Self::new(width, height, y_hat.iter().map(|&v| v >= 0.0).collect())
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.mask[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Reads a binary PGM; any nonzero sample is set.
    pub fn load_pgm(path: &Path) -> Result<Self, AlarmError> {
        let bytes = std::fs::read(path)?;
        let region = decode_pnm(&bytes, Some(ImageFormat::Pgm))?;
        let (w, h) = (region.width(), region.height());
        let mask = (0..h).flat_map(|r| (0..w).map(move |c| (c, r))).map(|(c, r)| region.y_at(c, r) != 0.0).collect();
        Self::new(w, h, mask)
    }

    /// Writes 0/255 binary PGM.
    pub fn save_pgm(&self, path: &Path) -> Result<(), AlarmError> {
        let pixels: Vec<u8> = self.mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
        std::fs::write(path, encode_pgm(self.width, self.height, &pixels))?;
        Ok(())
    }
}

fn reduce(erode: bool, mut window: impl Iterator<Item = bool>) -> bool {
    if erode {
        window.all(|b| b)
    } else {
        window.any(|b| b)
    }
}

/// Min (erode) or max (dilate) over the square window clipped to the frame.
/// Clipping keeps the window relation symmetric, so the two stay adjoint and
/// their composition is a true opening.
fn window_filter(map: &DecisionMap, r: usize, erode: bool) -> DecisionMap {
    let (w, h) = (map.width, map.height);
    let mut rows = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let (lo, hi) = (x.saturating_sub(r), (x + r).min(w - 1));
            rows[y * w + x] = reduce(erode, (lo..=hi).map(|k| map.mask[y * w + k]));
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let (lo, hi) = (y.saturating_sub(r), (y + r).min(h - 1));
            out[y * w + x] = reduce(erode, (lo..=hi).map(|k| rows[k * w + x]));
        }
    }
    DecisionMap {
        width: w,
        height: h,
        mask: out,
    }
}

/// Erosion followed by dilation with a `(2r+1)²` square; `r = 0` is a no-op.
pub fn morph_open(mask: &DecisionMap, kernel_radius: usize) -> DecisionMap {
    if kernel_radius == 0 || mask.mask.is_empty() {
        return mask.clone();
    }
    window_filter(&window_filter(mask, kernel_radius, true), kernel_radius, false)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlarmRegion {
    /// 1-based label in raster discovery order.
    pub component_id: usize,
    pub pixel_count: usize,
    /// `[x_min, y_min, x_max, y_max]`, inclusive.
    pub bbox: [usize; 4],
    #[serde(skip)]
    pub pixels: Vec<(usize, usize)>,
}

/// 8-connected components strictly larger than `min_pixels`, largest first.
pub fn extract_alarms(mask: &DecisionMap, min_pixels: usize) -> Result<Vec<AlarmRegion>, AlarmError> {
    if min_pixels == 0 {
        return Err(AlarmError::MinPixels);
    }
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut next_id = 0;
    for start in 0..w * h {
        if !mask.mask[start] || seen[start] {
            continue;
        }
        next_id += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut pixels = Vec::new();
        let mut bbox = [usize::MAX, usize::MAX, 0, 0];
        while let Some(k) = queue.pop_front() {
            let (x, y) = (k % w, k / w);
            pixels.push((x, y));
            bbox = [bbox[0].min(x), bbox[1].min(y), bbox[2].max(x), bbox[3].max(y)];
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let nk = ny * w + nx;
                    if mask.mask[nk] && !seen[nk] {
                        seen[nk] = true;
                        queue.push_back(nk);
                    }
                }
            }
        }
        if pixels.len() > min_pixels {
            regions.push(AlarmRegion {
                component_id: next_id,
                pixel_count: pixels.len(),
                bbox,
                pixels,
            });
        }
    }
    regions.sort_by(|a, b| b.pixel_count.cmp(&a.pixel_count).then(a.component_id.cmp(&b.component_id)));
    Ok(regions)
}

pub fn alarms_to_json(alarms: &[AlarmRegion]) -> String {
    serde_json::to_string_pretty(alarms).expect("alarm regions always serialize")
}
