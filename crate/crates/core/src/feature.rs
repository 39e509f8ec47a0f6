//! Block-DCT feature signatures.
//!
//! The grayscale image is padded with mid-gray to a multiple of 8 on the
//! right and bottom, level-shifted by 128, and every 8x8 block is replaced by
//! its orthonormal 2-D DCT-II. Coefficient `(u, v)` of a block sits at row
//! offset `u` (vertical frequency) and column offset `v` inside that block.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const BLOCK: usize = 8;
const PAD_LEVEL: u8 = 128;
const LEVEL_SHIFT: f64 = 128.0;

/// DCT coefficients laid out like the padded image, row-major.
#[derive(Clone, PartialEq)]
pub struct FeatureSignature {
    width: usize,
    height: usize,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for FeatureSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FeatureSignature({}x{})", self.width, self.height)
    }
}

/// Dimensions after padding to a multiple of the block size.
pub fn padded_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(BLOCK) * BLOCK, height.div_ceil(BLOCK) * BLOCK)
}

fn basis() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut a = [[0.0; BLOCK]; BLOCK];
        for (k, row) in a.iter_mut().enumerate() {
            let scale = if k == 0 {
                (1.0 / BLOCK as f64).sqrt()
            } else {
                (2.0 / BLOCK as f64).sqrt()
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = scale * (((2 * x + 1) * k) as f64 * std::f64::consts::PI / (2 * BLOCK) as f64).cos();
            }
        }
        a
    })
}

/// Forward 8x8 DCT-II, row-major in and out.
pub fn dct8x8(block: &[f64; 64]) -> [f64; 64] {
    let a = basis();
    let mut tmp = [0.0; 64];
    for u in 0..BLOCK {
        for c in 0..BLOCK {
            tmp[u * BLOCK + c] = (0..BLOCK).map(|r| a[u][r] * block[r * BLOCK + c]).sum();
        }
    }
    let mut out = [0.0; 64];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            out[u * BLOCK + v] = (0..BLOCK).map(|c| tmp[u * BLOCK + c] * a[v][c]).sum();
        }
    }
    out
}

/// Inverse of [`dct8x8`].
pub fn idct8x8(coeffs: &[f64; 64]) -> [f64; 64] {
    let a = basis();
    let mut tmp = [0.0; 64];
    for r in 0..BLOCK {
        for v in 0..BLOCK {
            tmp[r * BLOCK + v] = (0..BLOCK).map(|u| a[u][r] * coeffs[u * BLOCK + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for r in 0..BLOCK {
        for c in 0..BLOCK {
            out[r * BLOCK + c] = (0..BLOCK).map(|v| tmp[r * BLOCK + v] * a[v][c]).sum();
        }
    }
    out
}

/// Computes the block-DCT signature of a grayscale image.
pub fn block_dct_signature(img: &GrayImage) -> FeatureSignature {
    let (w, h) = img.dims();
    let (pw, ph) = padded_dims(w, h);
    let mut coeffs = vec![0.0; pw * ph];
    let mut block = [0.0; 64];
    for by in (0..ph).step_by(BLOCK) {
        for bx in (0..pw).step_by(BLOCK) {
            for r in 0..BLOCK {
                for c in 0..BLOCK {
                    let (x, y) = (bx + c, by + r);
                    let p = if x < w && y < h { img.pixel(x, y) } else { PAD_LEVEL };
                    block[r * BLOCK + c] = p as f64 - LEVEL_SHIFT;
                }
            }
            let out = dct8x8(&block);
            for r in 0..BLOCK {
                let row = (by + r) * pw + bx;
                coeffs[row..row + BLOCK].copy_from_slice(&out[r * BLOCK..(r + 1) * BLOCK]);
            }
        }
    }
    FeatureSignature {
        width: pw,
        height: ph,
        coeffs,
    }
}

impl FeatureSignature {
    pub fn from_coeffs(width: usize, height: usize, coeffs: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || !width.is_multiple_of(BLOCK) || !height.is_multiple_of(BLOCK) {
            return Err(Error::Signature(format!(
                "{width}x{height} is not a multiple of {BLOCK}"
            )));
        }
        if coeffs.len() != width * height {
            return Err(Error::Signature(format!(
                "{} coefficients for {width}x{height}",
                coeffs.len()
            )));
        }
        Ok(Self { width, height, coeffs })
    }

    /// Padded width.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Padded height.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Copies the 8x8 block whose top-left corner is at block index `(bx, by)`.
    pub fn block(&self, bx: usize, by: usize) -> [f64; 64] {
        let mut out = [0.0; 64];
        for r in 0..BLOCK {
            let row = (by * BLOCK + r) * self.width + bx * BLOCK;
            out[r * BLOCK..(r + 1) * BLOCK].copy_from_slice(&self.coeffs[row..row + BLOCK]);
        }
        out
    }

    /// Rounds every coefficient to the precision of the stored encoding.
    pub fn quantized(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|&c| c as f32 as f64).collect();
        Self {
            width: self.width,
            height: self.height,
            coeffs,
        }
    }

    /// Little-endian `f32` blob, row-major.
    pub fn encode(&self) -> Vec<u8> {
        self.coeffs.iter().flat_map(|&c| (c as f32).to_le_bytes()).collect()
    }

    pub fn decode(bytes: &[u8], width: usize, height: usize) -> Result<Self> {
        let expected = width * height * 4;
        if bytes.len() != expected {
            return Err(Error::Signature(format!(
                "blob is {} bytes, expected {expected} for {width}x{height}",
                bytes.len()
            )));
        }
        let coeffs = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .map(|v| {
                if v.is_finite() {
                    Ok(v as f64)
                } else {
                    Err(Error::Signature("non-finite coefficient".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_coeffs(width, height, coeffs)
    }

    /// Pixel values (level shift undone) of the padded image this signature describes.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs.len()];
        for by in 0..self.height / BLOCK {
            for bx in 0..self.width / BLOCK {
                let px = idct8x8(&self.block(bx, by));
                for r in 0..BLOCK {
                    for c in 0..BLOCK {
                        out[(by * BLOCK + r) * self.width + bx * BLOCK + c] = px[r * BLOCK + c] + LEVEL_SHIFT;
                    }
                }
            }
        }
        out
    }
}
