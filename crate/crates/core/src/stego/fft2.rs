//! Two-dimensional DFT on row-major complex buffers.

use rustfft::FftPlanner;
use rustfft::num_complex::Complex64;

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

/// In-place 2-D DFT of an `h x w` buffer. The inverse is scaled by `1 / (h w)`.
pub fn fft2(data: &mut Vec<Complex64>, h: usize, w: usize, inverse: bool) {
    assert_eq!(data.len(), h * w, "buffer does not match {h}x{w}");
    let mut planner = FftPlanner::new();
    let plan = |n: usize, planner: &mut FftPlanner<f64>| {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    plan(w, &mut planner).process(data);
    let mut t = transpose(data, h, w);
    plan(h, &mut planner).process(&mut t);
    *data = transpose(&t, w, h);
    if inverse {
        let s = 1.0 / (h * w) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}
