//! Denoising and binarization of an extracted watermark image.

use crate::imaging::GrayImage;

/// Median of nine values by a fixed exchange network.
fn median9(mut p: [u8; 9]) -> u8 {
    let mut op = |a: usize, b: usize| {
        if p[a] > p[b] {
            p.swap(a, b);
        }
    };
    for (a, b) in [
        (1, 2),
        (4, 5),
        (7, 8),
        (0, 1),
        (3, 4),
        (6, 7),
        (1, 2),
        (4, 5),
        (7, 8),
        (0, 3),
        (5, 8),
        (4, 7),
        (3, 6),
        (1, 4),
        (2, 5),
        (4, 7),
        (4, 2),
        (6, 4),
        (4, 2),
    ] {
        op(a, b);
    }
    p[4]
}

fn median_at(src: &[u8], w: usize, h: usize, x: usize, y: usize) -> u8 {
    let xs = [x.saturating_sub(1), x, (x + 1).min(w - 1)];
    let ys = [y.saturating_sub(1), y, (y + 1).min(h - 1)];
    let mut win = [0u8; 9];
    for (i, &yy) in ys.iter().enumerate() {
        for (j, &xx) in xs.iter().enumerate() {
            win[i * 3 + j] = src[yy * w + xx];
        }
    }
    median9(win)
}

/// 3x3 median with replicated edges.
pub fn median3x3(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let src = img.as_raw();
    GrayImage::from_fn(w, h, |x, y| median_at(src, w, h, x, y))
}

/// Otsu's threshold: the level `t` maximizing between-class variance of `{v <= t}` and `{v > t}`.
///
/// Returns `None` when the histogram has a single occupied level.
pub fn otsu_threshold(values: &[u8]) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0u8);
    for (t, &c) in hist.iter().enumerate().take(255) {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let diff = sum0 / w0 - (sum_all - sum0) / w1;
        let between = w0 * w1 * diff * diff;
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    Some(best.1)
}

/// Upper bound on median passes; only periodic patterns such as one-pixel stripes hit it.
const MAX_MEDIAN_PASSES: usize = 64;

/// Repeats the 3x3 median until the image stops changing (a median root).
///
/// After the first pass only pixels next to a change are recomputed; the
/// rest would reproduce their previous value.
pub fn median_root(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dims();
    let mut prev = img.as_raw().to_vec();
    let mut cur = median3x3(img).into_raw();
    let mut changed: Vec<bool> = prev.iter().zip(&cur).map(|(a, b)| a != b).collect();
    for _ in 1..MAX_MEDIAN_PASSES {
        if !changed.contains(&true) {
            break;
        }
        let mut dirty = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if changed[y * w + x] {
                    for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                        dirty[yy * w + x.saturating_sub(1)..=yy * w + (x + 1).min(w - 1)].fill(true);
                    }
                }
            }
        }
        prev.copy_from_slice(&cur);
        for (i, _) in dirty.iter().enumerate().filter(|(_, d)| **d) {
            cur[i] = median_at(&prev, w, h, i % w, i / w);
        }
        for i in 0..w * h {
            changed[i] = cur[i] != prev[i];
        }
    }
    GrayImage::from_raw(w, h, cur).expect("same dims")
}

/// Median filtering to a root, then Otsu binarization; light modules become 255, dark 0.
///
/// Thresholding commutes with the median, so the output is itself a median
/// root and a second application returns it unchanged. A histogram with a
/// single level maps to all-255.
pub fn cleanup_extracted(noisy: &GrayImage) -> GrayImage {
    let filtered = median_root(noisy);
    let (w, h) = filtered.dims();
    match otsu_threshold(filtered.as_raw()) {
        Some(t) => {
            let data = filtered.as_raw().iter().map(|&v| if v > t { 255 } else { 0 }).collect();
            GrayImage::from_raw(w, h, data).expect("same dims")
        }
        None => GrayImage::filled(w, h, 255),
    }
}
