use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CovarianceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Pgm,
    Ppm,
}

/// Y, U, V planes of a rectangular region, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRegion {
    width: usize,
    height: usize,
    y: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    /// `(x1, x2)` offset of the region in its source frame.
    pub origin: (usize, usize),
}

impl ImageRegion {
    pub fn new(width: usize, height: usize, y: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self, CovarianceError> {
        if width < 3 || height < 3 {
            return Err(CovarianceError::Undersized { width, height });
        }
        let n = width * height;
        if y.len() != n || u.len() != n || v.len() != n {
            return Err(CovarianceError::Shape(format!(
                "planes must hold {n} samples, got {}/{}/{}",
                y.len(),
                u.len(),
                v.len()
            )));
        }
        Ok(Self {
            width,
            height,
            y,
            u,
            v,
            origin: (0, 0),
        })
    }

    /// Luma-only region with zero chroma.
    pub fn from_luma(width: usize, height: usize, y: Vec<f64>) -> Result<Self, CovarianceError> {
        let n = y.len();
        Self::new(width, height, y, vec![0.0; n], vec![0.0; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Value of plane `Y` at column `x1`, row `x2`.
    pub fn y_at(&self, x1: usize, x2: usize) -> f64 {
        self.y[x2 * self.width + x1]
    }

    pub fn u_at(&self, x1: usize, x2: usize) -> f64 {
        self.u[x2 * self.width + x1]
    }

    pub fn v_at(&self, x1: usize, x2: usize) -> f64 {
        self.v[x2 * self.width + x1]
    }

    /// Sub-rectangle starting at column `x1`, row `x2`.
    pub fn crop(&self, x1: usize, x2: usize, width: usize, height: usize) -> Result<Self, CovarianceError> {
        if x1 + width > self.width || x2 + height > self.height {
            return Err(CovarianceError::Shape(format!(
                "crop {width}x{height}+{x1}+{x2} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let pick = |plane: &[f64]| -> Vec<f64> {
            (x2..x2 + height)
                .flat_map(|r| plane[r * self.width + x1..r * self.width + x1 + width].iter().copied())
                .collect()
        };
        let mut out = Self::new(width, height, pick(&self.y), pick(&self.u), pick(&self.v))?;
        out.origin = (self.origin.0 + x1, self.origin.1 + x2);
        Ok(out)
    }
}

/// BT.601 full-range RGB → YUV.
pub fn rgb_to_yuv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    (y, 0.492 * (b - y), 0.877 * (r - y))
}

pub fn load_image(path: &Path, format: ImageFormat) -> Result<ImageRegion, CovarianceError> {
    let bytes = std::fs::read(path)?;
    decode_pnm(&bytes, Some(format))
}

/// Decodes binary P5/P6 with maxval 255. `expected` rejects the other kind.
pub fn decode_pnm(bytes: &[u8], expected: Option<ImageFormat>) -> Result<ImageRegion, CovarianceError> {
    let mut cursor = Header { bytes, pos: 0 };
    let magic = cursor.token()?;
    let format = match magic.as_str() {
        "P5" => ImageFormat::Pgm,
        "P6" => ImageFormat::Ppm,
        other => return Err(CovarianceError::Unsupported(format!("magic '{other}'"))),
    };
    if let Some(want) = expected {
        if want != format {
            return Err(CovarianceError::Unsupported(format!("expected {want:?}, found {magic}")));
        }
    }
    let width = cursor.number()?;
    let height = cursor.number()?;
    let maxval = cursor.number()?;
    if maxval != 255 {
        return Err(CovarianceError::Unsupported(format!("maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let start = cursor.pos + 1;
    let channels = if format == ImageFormat::Ppm { 3 } else { 1 };
    let need = width * height * channels;
    let payload = bytes.get(start..).unwrap_or(&[]);
    if payload.len() < need {
        return Err(CovarianceError::Truncated {
            expected: need,
            actual: payload.len(),
        });
    }
    let n = width * height;
    let (mut y, mut u, mut v) = (Vec::with_capacity(n), vec![0.0; n], vec![0.0; n]);
    match format {
        ImageFormat::Pgm => y.extend(payload[..n].iter().map(|&p| f64::from(p))),
        ImageFormat::Ppm => {
            for (k, px) in payload[..need].chunks_exact(3).enumerate() {
                let (yy, uu, vv) = rgb_to_yuv(f64::from(px[0]), f64::from(px[1]), f64::from(px[2]));
                y.push(yy);
                u[k] = uu;
                v[k] = vv;
            }
        }
    }
    ImageRegion::new(width, height, y, u, v)
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn token(&mut self) -> Result<String, CovarianceError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while !matches!(self.bytes.get(self.pos), Some(b'\n') | None) {
                        self.pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return Err(CovarianceError::Unsupported("truncated header".into())),
            }
        }
        let start = self.pos;
        while matches!(self.bytes.get(self.pos), Some(c) if !c.is_ascii_whitespace()) {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self) -> Result<usize, CovarianceError> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| CovarianceError::Unsupported(format!("bad header field '{tok}'")))
    }
}

/// Encodes an 8-bit grayscale raster as binary PGM.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_pgm() {
        let img = decode_pnm(&encode_pgm(4, 4, &[128; 16]), None).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(img.y_at(c, r), 128.0);
                assert_eq!((img.u_at(c, r), img.v_at(c, r)), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn red_ppm() {
        let mut bytes = b"P6\n# red\n3 3\n255\n".to_vec();
        for _ in 0..9 {
            bytes.extend_from_slice(&[255, 0, 0]);
        }
        let img = decode_pnm(&bytes, Some(ImageFormat::Ppm)).unwrap();
        assert!((img.y_at(1, 1) - 76.245).abs() < 1e-12);
        assert!((img.v_at(1, 1) - 0.877 * (255.0 - 76.245)).abs() < 1e-12);
        assert!((img.u_at(1, 1) - 0.492 * (0.0 - 76.245)).abs() < 1e-12);
    }

    #[test]
    fn ascii_and_wide_formats_are_rejected() {
        assert!(matches!(
            decode_pnm(b"P3\n3 3\n255\n0 0 0", None),
            Err(CovarianceError::Unsupported(_))
        ));
        assert!(matches!(
            decode_pnm(b"P5\n3 3\n65535\n", None),
            Err(CovarianceError::Unsupported(_))
        ));
        assert!(matches!(
            decode_pnm(&encode_pgm(3, 3, &[0; 9]), Some(ImageFormat::Ppm)),
            Err(CovarianceError::Unsupported(_))
        ));
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = encode_pgm(4, 4, &[1; 16]);
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            decode_pnm(&bytes, None),
            Err(CovarianceError::Truncated { expected: 16, actual: 13 })
        ));
    }

    #[test]
    fn crop_tracks_origin() {
        let img = ImageRegion::from_luma(5, 4, (0..20).map(f64::from).collect()).unwrap();
        let c = img.crop(1, 1, 3, 3).unwrap();
        assert_eq!(c.origin, (1, 1));
        assert_eq!(c.y_at(0, 0), 6.0);
        assert!(img.crop(3, 0, 3, 3).is_err());
    }
}
