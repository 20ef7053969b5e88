//! Thin wrappers over rustfft with a per-thread plan cache.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn rustfft::Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn with_plan(n: usize, forward: bool, buf: &mut [Complex64]) {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        let plan = cache
            .entry((n, forward))
            .or_insert_with(|| {
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone();
        plan.process(buf);
    });
}

/// Unnormalized DFT, `X_k = sum_j x_j e^{-2 pi i jk/n}`.
pub fn forward(buf: &mut [Complex64]) {
    let n = buf.len();
    with_plan(n, true, buf);
}

/// Unnormalized inverse DFT, `x_j = sum_k X_k e^{+2 pi i jk/n}`.
pub fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    with_plan(n, false, buf);
}

/// In-place 2-D transform of an `nx x ny` array stored row-major with x
/// fastest (`idx = iy*nx + ix`). Rows first, then columns through a scratch
/// column buffer.
pub fn forward_2d(buf: &mut [Complex64], nx: usize, ny: usize) {
    transform_2d(buf, nx, ny, true);
}

pub fn inverse_2d(buf: &mut [Complex64], nx: usize, ny: usize) {
    transform_2d(buf, nx, ny, false);
}

fn transform_2d(buf: &mut [Complex64], nx: usize, ny: usize, fwd: bool) {
    assert_eq!(buf.len(), nx * ny);
    for row in buf.chunks_exact_mut(nx) {
        with_plan(nx, fwd, row);
    }
    let mut col = vec![Complex64::default(); ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col[iy] = buf[iy * nx + ix];
        }
        with_plan(ny, fwd, &mut col);
        for iy in 0..ny {
            buf[iy * nx + ix] = col[iy];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_roundtrip() {
        let n = 16;
        let orig: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut buf = orig.clone();
        forward(&mut buf);
        inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_2d() {
        let (nx, ny) = (8, 4);
        let orig: Vec<Complex64> =
            (0..nx * ny).map(|i| Complex64::new((i % 5) as f64, (i % 3) as f64)).collect();
        let mut buf = orig.clone();
        forward_2d(&mut buf, nx, ny);
        inverse_2d(&mut buf, nx, ny);
        let scale = (nx * ny) as f64;
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }
}
