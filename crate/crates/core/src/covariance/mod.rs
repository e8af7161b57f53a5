//! Region covariance descriptors and the posterior classifiers fed by them.

mod classifier;
mod features;
mod image;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fusion::OracleLabel;

pub use classifier::{train_classifier, Classifier, ClassifierSpec, Metric, Model, Standardization};
pub use features::{
    decision_d5, describe, pixel_features, region_covariance, region_feature, BorderPolicy, FeatureGrid,
    PixelFeature, RegionCovariance, RegionFeature, FEATURE_DIM, REGION_FEATURE_LEN,
};
pub use image::{decode_pnm, encode_pgm, load_image, rgb_to_yuv, ImageFormat, ImageRegion};

#[derive(Debug, Error)]
pub enum CovarianceError {
    #[error("region {width}x{height} is smaller than 3x3")]
    Undersized { width: usize, height: usize },
    #[error("covariance needs at least 2 pixels, got {0}")]
    TooFewPixels(usize),
    #[error("posterior {0} outside [0, 1]")]
    Posterior(f64),
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error("truncated raster: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{0}")]
    Shape(String),
    #[error("training: {0}")]
    Training(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `path,label` row of a training manifest. Relative paths resolve
/// against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: OracleLabel,
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CovarianceError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CovarianceError::Manifest {
        line: 0,
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CovarianceError::Manifest {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| CovarianceError::Manifest { line, message };
        if record.len() != 2 {
            return Err(bad(format!("expected 2 fields, found {}", record.len())));
        }
        let label = match record[1].trim() {
            "1" | "+1" => OracleLabel::Present,
            "-1" => OracleLabel::Absent,
            other => return Err(bad(format!("label must be -1 or 1, got '{other}'"))),
        };
        let raw = PathBuf::from(record[0].trim());
        let path = if raw.is_absolute() { raw } else { base.join(raw) };
        out.push(ManifestEntry { path, label });
    }
    Ok(out)
}

/// Picks the decoder from the file extension (`.ppm` → PPM, else PGM).
pub fn image_format_for(path: &Path) -> ImageFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("ppm") => ImageFormat::Ppm,
        _ => ImageFormat::Pgm,
    }
}
