//! Keyed watermark embedding in the 2-D Fourier spectrum.
//!
//! The QR image is written into a buffer of `(H/2 - 2 m_r) x (W - 2 m_c)`
//! cells whose rows and columns are scattered by the keyed index map. Each
//! cell is added at `(m_r + xh[r], m_c + xw[c])` and at the conjugate
//! position, so the spatial perturbation is real.

use rustfft::num_complex::Complex64;

use super::fft2::fft2;
use super::xmap::KeyedIndexMap;
use crate::error::{Error, Result};
use crate::imaging::{GrayImage, RgbImage, quantize_u8};

/// Relative bracket width at which the alpha search stops.
const ALPHA_TOLERANCE: f64 = 1e-8;
/// `v / 255` for every 8-bit level.
const UNIT: [f64; 256] = {
    let mut t = [0.0; 256];
    let mut i = 0;
    while i < 256 {
        t[i] = i as f64 / 255.0;
        i += 1;
    }
    t
};

/// Share of extracted values clipped at each end before scaling to 0..=255.
const NORMALIZE_TAIL: f64 = 0.005;
/// Spread below which the extracted buffer is rounding noise. A single
/// one-level pixel change already moves every coefficient by about 4e-3.
const FLAT_SPREAD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub fn of_gray(img: &GrayImage) -> Self {
        Self {
            rows: img.height(),
            cols: img.width(),
        }
    }

    pub fn of_rgb(img: &RgbImage) -> Self {
        Self {
            rows: img.height(),
            cols: img.width(),
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Spectral rows and columns left untouched at the low-frequency edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Margins {
    pub rows: usize,
    pub cols: usize,
}

impl Margins {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    /// One sixteenth of each dimension.
    pub fn default_for(host: Shape) -> Self {
        Self {
            rows: host.rows / 16,
            cols: host.cols / 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedParams {
    pub margins: Margins,
    pub alpha: f64,
}

/// Shape of the embedding buffer for a host of shape `host`.
pub fn buffer_shape(host: Shape, margins: Margins) -> Result<Shape> {
    if margins.rows == 0 || margins.cols == 0 {
        return Err(Error::Config("margins must be at least 1".into()));
    }
    let rows = (host.rows / 2)
        .checked_sub(2 * margins.rows)
        .filter(|&r| r > 0)
        .ok_or(Error::Capacity {
            axis: "rows",
            needed: 2 * margins.rows + 1,
            available: host.rows / 2,
        })?;
    let cols = host
        .cols
        .checked_sub(2 * margins.cols)
        .filter(|&c| c > 0)
        .ok_or(Error::Capacity {
            axis: "cols",
            needed: 2 * margins.cols + 1,
            available: host.cols,
        })?;
    Ok(Shape { rows, cols })
}

/// Checks that a QR image of shape `qr` fits the buffer; returns the buffer shape.
pub fn capacity_check(host: Shape, margins: Margins, qr: Shape) -> Result<Shape> {
    let buf = buffer_shape(host, margins)?;
    if qr.rows > buf.rows {
        return Err(Error::Capacity {
            axis: "rows",
            needed: qr.rows,
            available: buf.rows,
        });
    }
    if qr.cols > buf.cols {
        return Err(Error::Capacity {
            axis: "cols",
            needed: qr.cols,
            available: buf.cols,
        });
    }
    Ok(buf)
}

fn check_xmap(xmap: &KeyedIndexMap, buf: Shape) -> Result<()> {
    if xmap.shape() != (buf.rows, buf.cols) {
        return Err(Error::Dimension(format!(
            "index map is {}x{}, buffer is {buf}",
            xmap.xh.len(),
            xmap.xw.len()
        )));
    }
    Ok(())
}

fn positions(host: Shape, margins: Margins, xmap: &KeyedIndexMap, r: usize, c: usize) -> [usize; 2] {
    let (h, w) = (host.rows, host.cols);
    let (pr, pc) = (margins.rows + xmap.xh[r], margins.cols + xmap.xw[c]);
    let (mr, mc) = ((h - pr) % h, (w - pc) % w);
    [pr * w + pc, mr * w + mc]
}

/// Real spatial perturbation, in normalized `[0, 1]` units, produced by a unit `alpha`.
pub fn watermark_pattern(host: Shape, qr: &GrayImage, xmap: &KeyedIndexMap, margins: Margins) -> Result<Vec<f64>> {
    let buf = capacity_check(host, margins, Shape::of_gray(qr))?;
    check_xmap(xmap, buf)?;
    let mut spectrum = vec![Complex64::default(); host.rows * host.cols];
    for r in 0..qr.height() {
        for c in 0..qr.width() {
            let v = qr.pixel(c, r) as f64 / 255.0;
            for p in positions(host, margins, xmap, r, c) {
                spectrum[p].re += v;
            }
        }
    }
    fft2(&mut spectrum, host.rows, host.cols, true);
    Ok(spectrum.into_iter().map(|z| z.re).collect())
}

/// Adds `alpha * pattern` to every normalized channel, clips and requantizes.
pub fn apply_pattern(host: &RgbImage, pattern: &[f64], alpha: f64) -> Result<RgbImage> {
    if pattern.len() != host.width() * host.height() {
        return Err(Error::Dimension("pattern does not match host".into()));
    }
    let data = host
        .as_raw()
        .chunks_exact(3)
        .zip(pattern)
        .flat_map(|(px, &d)| {
            px.iter()
                .map(move |&v| quantize_u8((v as f64 / 255.0 + alpha * d).clamp(0.0, 1.0) * 255.0))
        })
        .collect();
    RgbImage::from_raw(host.width(), host.height(), data)
}

/// Embeds `qr` (light modules 255) into `host`.
///
/// The transform is linear, so adding the buffer to the host spectrum and
/// inverting equals adding the inverse transform of the buffer alone.
pub fn embed_watermark(host: &RgbImage, qr: &GrayImage, xmap: &KeyedIndexMap, params: EmbedParams) -> Result<RgbImage> {
    if !(params.alpha.is_finite() && params.alpha >= 0.0) {
        return Err(Error::Domain(format!("alpha {}", params.alpha)));
    }
    let pattern = watermark_pattern(Shape::of_rgb(host), qr, xmap, params.margins)?;
    apply_pattern(host, &pattern, params.alpha)
}

/// PSNR in dB between two 8-bit RGB images.
pub fn pixel_psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Dimension("images differ in size".into()));
    }
    let sum: u64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| (x as i64 - y as i64).pow(2) as u64)
        .sum();
    crate::similarity::psnr_from_mse(sum as f64 / a.as_raw().len() as f64, 255.0)
}

/// Largest alpha (to a relative precision of 1e-8) whose output keeps pixel PSNR at or above `target_db`.
///
/// Uses the same arithmetic as `pixel_psnr(host, &apply_pattern(..))`. Each
/// output level is monotone in alpha, so inside a bracket only the levels
/// that differ between its ends need recomputing.
pub fn alpha_for_psnr(host: &RgbImage, pattern: &[f64], target_db: f64) -> Result<f64> {
    if !(target_db.is_finite() && target_db > 0.0) {
        return Err(Error::Domain(format!("target PSNR {target_db}")));
    }
    if pattern.len() != host.width() * host.height() {
        return Err(Error::Dimension("pattern does not match host".into()));
    }
    let raw = host.as_raw();
    let n = raw.len() as f64;
    let target_mse = 255.0 * 255.0 * 10f64.powf(-target_db / 10.0);
    let level =
        |i: usize, alpha: f64| quantize_u8((UNIT[raw[i] as usize] + alpha * pattern[i / 3]).clamp(0.0, 1.0) * 255.0);
    let sq = |i: usize, q: u8| (q as i64 - raw[i] as i64).pow(2) as u64;
    // Excess MSE over the target, and whether the PSNR target holds.
    let judge = |sum: u64| -> Result<(f64, bool)> {
        let mse = sum as f64 / n;
        Ok((
            mse - target_mse,
            crate::similarity::psnr_from_mse(mse, 255.0)? >= target_db,
        ))
    };
    let full = |alpha: f64| judge((0..raw.len()).map(|i| sq(i, level(i, alpha))).sum());

    // Without clipping and rounding the squared error grows as alpha^2 * mean(d^2).
    let energy = pattern.iter().map(|d| d * d).sum::<f64>() / pattern.len() as f64;
    if energy.is_nan() || energy <= 0.0 {
        return Err(Error::Domain("pattern has no visible effect".into()));
    }
    let guess = (10f64.powf(-target_db / 10.0) / energy).sqrt();
    let (mut hi, mut f_hi) = (guess, full(guess)?);
    let mut passing = None;
    let mut guard = 0;
    while f_hi.1 {
        passing = Some((hi, f_hi));
        hi *= 2.0;
        f_hi = full(hi)?;
        guard += 1;
        if guard > 60 {
            return Err(Error::Domain("pattern has no visible effect".into()));
        }
    }
    let (mut lo, mut f_lo) = match passing {
        Some(p) => p,
        None => loop {
            let lo = hi * 0.5;
            if lo < guess * 1e-6 {
                break (0.0, (-target_mse, true));
            }
            let f = full(lo)?;
            if f.1 {
                break (lo, f);
            }
            (hi, f_hi) = (lo, f);
        },
    };

    // Levels that still differ between the bracket ends, with their values at both ends.
    let mut fixed_sum = 0u64;
    let mut active: Vec<(u32, u8, u8)> = Vec::new();
    for i in 0..raw.len() {
        let (a, b) = (level(i, lo), level(i, hi));
        if a == b {
            fixed_sum += sq(i, a);
        } else {
            active.push((i as u32, a, b));
        }
    }

    // False position on the excess MSE until a step fails to halve the
    // bracket (rounding makes the error a staircase near the target), then
    // bisection. The bracket always keeps a passing `lo` and a failing `hi`.
    let mut bisect = false;
    let mut mids = Vec::with_capacity(active.len());
    while hi - lo > ALPHA_TOLERANCE * hi {
        let width = hi - lo;
        let mid = if bisect || f_hi.0 <= f_lo.0 {
            0.5 * (lo + hi)
        } else {
            let t = (-f_lo.0 / (f_hi.0 - f_lo.0)).clamp(0.01, 0.99);
            lo + t * width
        };
        mids.clear();
        mids.extend(active.iter().map(|&(i, _, _)| level(i as usize, mid)));
        let sum = fixed_sum
            + active
                .iter()
                .zip(&mids)
                .map(|(&(i, _, _), &q)| sq(i as usize, q))
                .sum::<u64>();
        let f_mid = judge(sum)?;
        let passes = f_mid.1;
        if passes {
            (lo, f_lo) = (mid, f_mid);
        } else {
            (hi, f_hi) = (mid, f_mid);
        }
        let mut k = 0;
        active.retain_mut(|e| {
            let q = mids[k];
            k += 1;
            if passes {
                e.1 = q
            } else {
                e.2 = q
            }
            if e.1 == e.2 {
                fixed_sum += sq(e.0 as usize, q);
                false
            } else {
                true
            }
        });
        bisect = bisect || hi - lo > 0.5 * width;
    }
    Ok(lo)
}

/// Spectrum of the channel-averaged, normalized image.
fn channel_mean_spectrum(img: &RgbImage) -> Vec<Complex64> {
    let host = Shape::of_rgb(img);
    // The channel average of the real parts is the real part of the channel-average spectrum.
    let mut spectrum: Vec<Complex64> = img
        .as_raw()
        .chunks_exact(3)
        .map(|p| Complex64::new((p[0] as f64 + p[1] as f64 + p[2] as f64) / (3.0 * 255.0), 0.0))
        .collect();
    fft2(&mut spectrum, host.rows, host.cols, false);
    spectrum
}

/// Averaged real parts at the direct and mirrored cells of the first `qr` buffer entries.
fn read_cells(spectrum: &[Complex64], host: Shape, margins: Margins, xmap: &KeyedIndexMap, qr: Shape) -> Vec<f64> {
    let mut values = Vec::with_capacity(qr.rows * qr.cols);
    for r in 0..qr.rows {
        for c in 0..qr.cols {
            let [p, q] = positions(host, margins, xmap, r, c);
            values.push(0.5 * (spectrum[p].re + spectrum[q].re));
        }
    }
    values
}

/// Blindly reads the QR buffer back from `candidate`.
///
/// Real parts at the direct and mirrored cells are averaged over both copies
/// and the three channels, cropped to `qr`, and scaled to 0..=255 after
/// clipping the extreme tails.
pub fn extract_watermark(candidate: &RgbImage, xmap: &KeyedIndexMap, margins: Margins, qr: Shape) -> Result<GrayImage> {
    let host = Shape::of_rgb(candidate);
    let buf = capacity_check(host, margins, qr)?;
    check_xmap(xmap, buf)?;
    let values = read_cells(&channel_mean_spectrum(candidate), host, margins, xmap, qr);
    to_gray(&values, qr)
}

fn to_gray(values: &[f64], shape: Shape) -> Result<GrayImage> {
    let (lo, hi) = robust_range(values)?;
    let data = values
        .iter()
        .map(|&v| quantize_u8((v - lo) / (hi - lo) * 255.0))
        .collect();
    GrayImage::from_raw(shape.cols, shape.rows, data)
}

/// Levels at the tail percentiles; fails when they are too close to separate anything.
pub fn robust_range(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Extraction("nothing extracted".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = sorted.len() - 1;
    let lo = sorted[(NORMALIZE_TAIL * last as f64).round() as usize];
    let hi = sorted[((1.0 - NORMALIZE_TAIL) * last as f64).round() as usize];
    if (hi - lo).is_nan() || hi - lo <= FLAT_SPREAD {
        return Err(Error::Extraction("extracted buffer is flat".into()));
    }
    Ok((lo, hi))
}

/// Half-width of the spectral window over which host power is averaged.
const NOISE_RADIUS: usize = 3;

/// Unscaled extracted values with an estimate of the host noise power at each.
#[derive(Debug, Clone)]
pub struct SoftExtraction {
    pub shape: Shape,
    /// Averaged real parts, row-major.
    pub values: Vec<f64>,
    /// Local mean of the squared imaginary part around each cell.
    ///
    /// The embedded buffer is Hermitian, so it adds nothing to the imaginary
    /// part and this measures the host (and any later distortion) alone.
    pub noise_power: Vec<f64>,
}

impl SoftExtraction {
    /// The same image [`extract_watermark`] returns.
    pub fn to_gray(&self) -> Result<GrayImage> {
        to_gray(&self.values, self.shape)
    }
}

/// Circular moving average over a `(2 radius + 1)^2` window.
fn circular_box_mean(data: &[f64], h: usize, w: usize, radius: usize) -> Vec<f64> {
    let pass = |src: &[f64], len: usize, count: usize, stride: usize, step: usize| -> Vec<f64> {
        let k = 2 * radius + 1;
        let mut out = vec![0.0; src.len()];
        for line in 0..count {
            let at = |i: usize| src[line * stride + (i % len) * step];
            let mut sum: f64 = (0..k).map(|d| at(len * k + d - radius)).sum();
            for i in 0..len {
                out[line * stride + i * step] = sum / k as f64;
                sum += at(len * k + i + radius + 1) - at(len * k + i - radius);
            }
        }
        out
    };
    let rows = pass(data, w, h, w, 1);
    pass(&rows, h, w, 1, w)
}

pub fn extract_soft(candidate: &RgbImage, xmap: &KeyedIndexMap, margins: Margins, qr: Shape) -> Result<SoftExtraction> {
    let host = Shape::of_rgb(candidate);
    let buf = capacity_check(host, margins, qr)?;
    check_xmap(xmap, buf)?;
    let spectrum = channel_mean_spectrum(candidate);
    let values = read_cells(&spectrum, host, margins, xmap, qr);
    let imag_sq: Vec<f64> = spectrum.iter().map(|z| z.im * z.im).collect();
    let power = circular_box_mean(&imag_sq, host.rows, host.cols, NOISE_RADIUS);
    let mut noise_power = Vec::with_capacity(values.len());
    for r in 0..qr.rows {
        for c in 0..qr.cols {
            noise_power.push(power[positions(host, margins, xmap, r, c)[0]]);
        }
    }
    Ok(SoftExtraction {
        shape: qr,
        values,
        noise_power,
    })
}
