use crate::error::{Error, Result};
use crate::idcodec::qr::QrConfig;
use crate::similarity::ConfidenceBand;
use crate::stego::{Margins, Shape};

/// How strongly the watermark is embedded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    /// Per-image alpha calibrated so the output's pixel PSNR stays at or above this many dB.
    TargetPsnr(f64),
    /// Fixed spectral alpha.
    Alpha(f64),
}

pub const DEFAULT_TARGET_PSNR_DB: f64 = 40.1;
/// Smallest QR module size, in pixels, the pipeline will embed.
pub const MIN_BOX_SIZE: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub strength: Strength,
    /// `None` uses one sixteenth of each canonical dimension.
    pub margins: Option<Margins>,
    /// `box_size` is the largest module size tried.
    pub qr: QrConfig,
    pub band: ConfidenceBand,
    pub verified_min_psnr: f64,
    pub tampered_max_psnr: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            strength: Strength::TargetPsnr(DEFAULT_TARGET_PSNR_DB),
            margins: None,
            qr: QrConfig::default(),
            band: ConfidenceBand::default(),
            verified_min_psnr: 32.0,
            tampered_max_psnr: 22.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        match self.strength {
            Strength::TargetPsnr(t) if !(t.is_finite() && t > 0.0) => {
                return Err(Error::Config(format!("target PSNR {t}")));
            }
            Strength::Alpha(a) if !(a.is_finite() && a > 0.0) => {
                return Err(Error::Config(format!("alpha must be positive, got {a}")));
            }
            _ => {}
        }
        if let Some(m) = self.margins
            && (m.rows == 0 || m.cols == 0)
        {
            return Err(Error::Config("margins must be at least 1".into()));
        }
        if self.qr.box_size < MIN_BOX_SIZE {
            return Err(Error::Config(format!("QR box size must be at least {MIN_BOX_SIZE}")));
        }
        self.band.validate()?;
        if !(self.verified_min_psnr.is_finite()
            && self.tampered_max_psnr.is_finite()
            && self.tampered_max_psnr < self.verified_min_psnr)
        {
            return Err(Error::Config(format!(
                "thresholds: tampered {} dB must be below verified {} dB",
                self.tampered_max_psnr, self.verified_min_psnr
            )));
        }
        Ok(())
    }

    pub fn margins_for(&self, host: Shape) -> Margins {
        self.margins.unwrap_or_else(|| Margins::default_for(host))
    }
}
