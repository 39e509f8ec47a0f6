//! Error metrics between signatures.

use crate::error::{Error, Result};
use crate::feature::FeatureSignature;

pub const DEFAULT_PEAK: f64 = 255.0;

/// Mean squared error, accumulated in f64.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} vs {} values", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Dimension("empty input".into()));
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `+inf` when `mse` is zero.
pub fn psnr_from_mse(mse: f64, peak: f64) -> Result<f64> {
    if mse.is_nan() || mse < 0.0 {
        return Err(Error::Domain(format!("mse {mse}")));
    }
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::Domain(format!("peak {peak}")));
    }
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// PSNR band mapped linearly onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceBand {
    pub floor_db: f64,
    pub ceiling_db: f64,
}

impl Default for ConfidenceBand {
    fn default() -> Self {
        Self {
            floor_db: 15.0,
            ceiling_db: 35.0,
        }
    }
}

impl ConfidenceBand {
    pub fn validate(&self) -> Result<()> {
        if !(self.floor_db.is_finite() && self.ceiling_db.is_finite() && self.floor_db < self.ceiling_db) {
            return Err(Error::Config(format!(
                "confidence band {}..{} dB",
                self.floor_db, self.ceiling_db
            )));
        }
        Ok(())
    }
}

pub fn confidence_score(psnr_db: f64, band: ConfidenceBand) -> f64 {
    if psnr_db == f64::INFINITY {
        return 1.0;
    }
    ((psnr_db - band.floor_db) / (band.ceiling_db - band.floor_db)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityResult {
    pub mse: f64,
    pub psnr_db: f64,
    pub exact_match: bool,
    pub confidence: f64,
}

pub fn compare_signatures(
    reference: &FeatureSignature,
    candidate: &FeatureSignature,
    band: ConfidenceBand,
) -> Result<SimilarityResult> {
    if reference.dims() != candidate.dims() {
        return Err(Error::Dimension(format!(
            "signature {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            candidate.width(),
            candidate.height()
        )));
    }
    let mse = mse(reference.coeffs(), candidate.coeffs())?;
    let psnr_db = psnr_from_mse(mse, DEFAULT_PEAK)?;
    Ok(SimilarityResult {
        mse,
        psnr_db,
        exact_match: mse == 0.0,
        confidence: confidence_score(psnr_db, band),
    })
}
