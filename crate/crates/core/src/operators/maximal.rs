//! Hardy-Littlewood and shifted dyadic maximal functions, the associated
//! square function, and the shifted-interval bookkeeping plan.

use crate::error::{LabError, Result};
use crate::grid::{Axis12, Field2D};
use crate::littlewood_paley::{project, BumpProfile, FreqWindow};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Window sums along one axis with cyclic wrap, via per-line prefix sums.
struct LineAverager {
    pref: Vec<f64>,
    n: usize,
}

impl LineAverager {
    fn new(vals: &[f64]) -> Self {
        let n = vals.len();
        let mut pref = Vec::with_capacity(n + 1);
        pref.push(0.0);
        for &v in vals {
            pref.push(pref.last().unwrap() + v);
        }
        LineAverager { pref, n }
    }

    /// Mean over `m` cells starting at cell `a` (mod n); `m <= n`.
    fn mean(&self, a: i64, m: usize) -> f64 {
        let n = self.n;
        let a = a.rem_euclid(n as i64) as usize;
        let sum = if a + m <= n {
            self.pref[a + m] - self.pref[a]
        } else {
            (self.pref[n] - self.pref[a]) + self.pref[a + m - n]
        };
        sum / m as f64
    }
}

fn axis_len(f: &Field2D, axis: Axis12) -> (usize, usize, f64) {
    match axis {
        Axis12::One => (f.grid.nx, f.grid.ny, f.grid.lx),
        Axis12::Two => (f.grid.ny, f.grid.nx, f.grid.ly),
    }
}

fn line_index(f: &Field2D, axis: Axis12, along: usize, line: usize) -> usize {
    match axis {
        Axis12::One => f.grid.index(along, line),
        Axis12::Two => f.grid.index(line, along),
    }
}

/// Shifted dyadic maximal function along one axis:
/// `sup_k` of the mean of `|f|` over the window `x - [s 2^k, (s+1) 2^k]`,
/// with `k` running over the grid-representable dyadic scales. Windows are
/// grid aligned (the offset `s 2^k` rounds to whole cells) and the windowed
/// span must fit in half the period; scales that would wrap further are
/// excluded, and if no scale qualifies this errors.
pub fn shifted_maximal(f: &Field2D, axis: Axis12, sigma: f64) -> Result<Field2D> {
    let (n, lines, period) = axis_len(f, axis);
    let h = period / n as f64;
    // dyadic widths in cells: 1, 2, 4, ... subject to (|sigma|+1) * w <= L/2
    let mut widths = Vec::new();
    let mut m = 1usize;
    while m <= n / 2 {
        if (sigma.abs() + 1.0) * (m as f64) * h <= 0.5 * period {
            widths.push(m);
        }
        m *= 2;
    }
    if widths.is_empty() {
        return Err(LabError::InvalidArgument(format!(
            "shifted window with sigma = {sigma} exceeds half the period at every dyadic scale"
        )));
    }
    let mut out = vec![Complex64::default(); f.grid.len()];
    for line in 0..lines {
        let vals: Vec<f64> =
            (0..n).map(|i| f.samples[line_index(f, axis, i, line)].norm()).collect();
        let avg = LineAverager::new(&vals);
        for i in 0..n {
            let mut best = 0.0f64;
            for &m in &widths {
                let off = (sigma * m as f64).round() as i64;
                // t in [sigma w, (sigma+1) w] maps to cells [i - off - m, i - off)
                best = best.max(avg.mean(i as i64 - off - m as i64, m));
            }
            out[line_index(f, axis, i, line)] = Complex64::new(best, 0.0);
        }
    }
    Field2D::from_samples(f.grid, out)
}

/// Hardy-Littlewood maximal function along one axis: the symmetrized shifted
/// maximal with windows on both sides of the point.
pub fn hl_maximal(f: &Field2D, axis: Axis12) -> Field2D {
    let left = shifted_maximal(f, axis, 0.0).expect("sigma = 0 always representable");
    let right = shifted_maximal(f, axis, -1.0).expect("sigma = -1 always representable");
    let samples = left
        .samples
        .iter()
        .zip(&right.samples)
        .map(|(a, b)| Complex64::new(a.re.max(b.re), 0.0))
        .collect();
    Field2D::from_samples(f.grid, samples).unwrap()
}

/// Square function: `l^2` over dyadic bands `j` of the shifted maximal of the
/// Littlewood-Paley pieces along `axis`.
pub fn square_function(
    profile: &BumpProfile,
    f: &Field2D,
    axis: Axis12,
    j_range: std::ops::RangeInclusive<i64>,
    sigma: f64,
) -> Result<Field2D> {
    let mut acc = vec![0.0f64; f.grid.len()];
    for j in j_range {
        let piece = project(profile, f, &FreqWindow::new(axis, j));
        let m = shifted_maximal(&piece, axis, sigma)?;
        for (a, v) in acc.iter_mut().zip(&m.samples) {
            *a += v.re * v.re;
        }
    }
    let samples = acc.into_iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect();
    Field2D::from_samples(f.grid, samples)
}

/// Shifted-interval descriptor from the corrected interval algebra:
/// `sigma_{l,n} = 2^{-3} n - l^2 2^{-kappa}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftWindow {
    pub l: i64,
    pub n: i64,
    pub sigma: f64,
}

/// The family of shifted windows at dyadic level `kappa` used to dominate a
/// kernel piece by shifted maximal functions: `l` ranges over the kernel
/// cells (`|l| <= 2^{kappa+1}`) and `n` over the translation lattice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftPlan {
    pub kappa: u32,
    pub windows: Vec<ShiftWindow>,
}

impl ShiftPlan {
    pub fn sigma(kappa: u32, l: i64, n: i64) -> f64 {
        0.125 * n as f64 - (l * l) as f64 * (-(kappa as f64)).exp2()
    }

    /// Build the plan for `|l| <= 2^{kappa+1}` and `n` in the given range.
    pub fn new(kappa: u32, n_range: std::ops::RangeInclusive<i64>) -> Self {
        let lmax = 2i64.pow(kappa + 1);
        let mut windows = Vec::new();
        for l in -lmax..=lmax {
            for n in n_range.clone() {
                windows.push(ShiftWindow { l, n, sigma: Self::sigma(kappa, l, n) });
            }
        }
        ShiftPlan { kappa, windows }
    }

    /// Re-derives every stored shift; true when the stored values satisfy the
    /// interval algebra exactly.
    pub fn consistent(&self) -> bool {
        self.windows.iter().all(|w| w.sigma == Self::sigma(self.kappa, w.l, w.n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_band_limited, Axis, FreqSupportSpec, Grid2D};

    fn indicator_strip(grid: Grid2D) -> Field2D {
        Field2D::from_fn(grid, |x, _| {
            if (0.0..1.0).contains(&x) { Complex64::new(1.0, 0.0) } else { Complex64::default() }
        })
    }

    #[test]
    fn constant_field_maximal_is_constant() {
        let grid = Grid2D::square(32, 4.0).unwrap();
        let f = Field2D::constant(grid, Complex64::new(0.0, -2.0));
        for sigma in [0.0, 1.0, -3.5, 7.0] {
            let m = shifted_maximal(&f, Axis12::One, sigma).unwrap();
            for v in &m.samples {
                assert!((v.re - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn strip_indicator_value_at_edge() {
        let grid = Grid2D::square(128, 8.0).unwrap();
        let f = indicator_strip(grid);
        let m = shifted_maximal(&f, Axis12::One, 0.0).unwrap();
        // x = 1 is cell index (1 + 4) / h
        let h: f64 = 8.0 / 128.0;
        let ix = ((1.0 + 4.0) / h).round() as usize;
        let got = m.samples[grid.index(ix, 0)].re;
        assert!((got - 1.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn sup_dominates_single_windows_and_monotone() {
        let grid = Grid2D::square(64, 2.0).unwrap();
        let f = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, 4.0), 21).unwrap();
        let m = shifted_maximal(&f, Axis12::Two, 2.0).unwrap();
        // single window check at a few spots: recompute mean by hand for m=4 cells
        let h = 2.0 / 64.0;
        for &(ix, iy) in &[(3usize, 10usize), (40, 33), (17, 60)] {
            let mcells = 4usize;
            let off = (2.0 * mcells as f64).round() as i64;
            let mut s = 0.0;
            for d in 0..mcells {
                let src = (iy as i64 - off - mcells as i64 + d as i64)
                    .rem_euclid(grid.ny as i64) as usize;
                s += f.samples[grid.index(ix, src)].norm();
            }
            let single = s / mcells as f64;
            assert!(m.samples[grid.index(ix, iy)].re >= single - 1e-12);
        }
        let _ = h;

        // monotone: |f| <= |f| + 1 pointwise
        let bigger = Field2D::from_samples(
            grid,
            f.samples.iter().map(|z| Complex64::new(z.norm() + 1.0, 0.0)).collect(),
        )
        .unwrap();
        let mb = shifted_maximal(&bigger, Axis12::Two, 2.0).unwrap();
        for (a, b) in m.samples.iter().zip(&mb.samples) {
            assert!(a.re <= b.re + 1e-12);
        }
    }

    #[test]
    fn rejects_unrepresentable_shift() {
        let grid = Grid2D::square(8, 1.0).unwrap();
        let f = Field2D::constant(grid, Complex64::new(1.0, 0.0));
        assert!(shifted_maximal(&f, Axis12::One, 1e9).is_err());
    }

    #[test]
    fn square_function_single_mode_reduces_to_one_band() {
        let p = BumpProfile::default();
        let grid = Grid2D::square(64, 1.0).unwrap();
        let mut spec = vec![Complex64::default(); grid.len()];
        spec[grid.index(8, 0)] = Complex64::new(1.0, 0.0); // freq 8 = 2^3
        let f = Field2D::from_spectral(grid, spec).unwrap();
        let s = square_function(&p, &f, Axis12::One, 0..=5, 0.0).unwrap();
        let only = shifted_maximal(&f, Axis12::One, 0.0).unwrap();
        let mut diff = 0.0f64;
        for (a, b) in s.samples.iter().zip(&only.samples) {
            diff = diff.max((a.re - b.re).abs());
        }
        assert!(diff < 1e-10, "diff {diff}");
    }

    #[test]
    fn square_function_grows_with_band_range() {
        let p = BumpProfile::default();
        let grid = Grid2D::square(64, 1.0).unwrap();
        let f = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, 8.0), 2).unwrap();
        let narrow = square_function(&p, &f, Axis12::One, 2..=3, 0.0).unwrap();
        let wide = square_function(&p, &f, Axis12::One, 0..=5, 0.0).unwrap();
        for (a, b) in narrow.samples.iter().zip(&wide.samples) {
            assert!(a.re <= b.re + 1e-12);
        }
    }

    #[test]
    fn shift_plan_algebra() {
        let plan = ShiftPlan::new(3, -4..=4);
        assert!(plan.consistent());
        assert_eq!(ShiftPlan::sigma(3, 0, 8), 1.0);
        assert_eq!(ShiftPlan::sigma(3, 2, 0), -0.5);
        assert_eq!(plan.windows.len(), (2 * 16 + 1) * 9);
    }
}
