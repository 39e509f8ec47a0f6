//! Where a candidate departs from its stored signature.

use cvs_core::imaging::{RgbImage, resize_bilinear, to_grayscale};
use cvs_core::pipeline::signature_of;
use cvs_core::registry::ContentRecord;

const BLOCK: usize = 8;

/// Per-block mean squared DCT difference at the record's canonical size.
pub fn block_errors(candidate: &RgbImage, record: &ContentRecord) -> cvs_core::Result<(usize, usize, Vec<f64>)> {
    let cd = record.canonical_dims;
    let cand = signature_of(&resize_bilinear(candidate, cd.width, cd.height)?);
    let stored = &record.signature;
    let (bw, bh) = (stored.width() / BLOCK, stored.height() / BLOCK);
    let mut errs = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let (a, b) = (stored.block(bx, by), cand.block(bx, by));
            errs.push(a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / 64.0);
        }
    }
    Ok((bw, bh, errs))
}

/// Dimmed candidate with blocks tinted red by log error; untouched blocks stay gray.
pub fn block_error_heatmap(candidate: &RgbImage, record: &ContentRecord) -> cvs_core::Result<RgbImage> {
    let cd = record.canonical_dims;
    let gray = to_grayscale(&resize_bilinear(candidate, cd.width, cd.height)?);
    let (bw, _, errs) = block_errors(candidate, record)?;
    // 0 dB error at 1e-3, full red at 1e3 (peak-level damage).
    let heat = |e: f64| ((e.max(1e-3).log10() + 3.0) / 6.0).clamp(0.0, 1.0);
    Ok(RgbImage::from_fn(cd.width, cd.height, |x, y| {
        let t = heat(errs[(y / BLOCK) * bw + x / BLOCK]);
        let g = gray.pixel(x, y) as f64 * 0.6;
        let r = g + (255.0 - g) * t;
        let gb = g * (1.0 - t);
        [r as u8, gb as u8, gb as u8]
    }))
}
