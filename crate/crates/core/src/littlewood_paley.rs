//! The bump family phi/psi/psi-tilde and dyadic frequency projections,
//! including the commutator bound used by the localization argument.

use crate::error::{LabError, Result};
use crate::grid::{Axis12, Field2D};
use crate::operators::maximal::hl_maximal;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Smooth even cutoff family built from the standard `exp(-1/x)` transition
/// on `[1, 2]`:
///
/// * `phi = 1` on `|z| <= 1`, `phi = 0` on `|z| >= 2`, `0 <= phi <= 1`;
/// * `psi(z) = phi(z) - phi(2z)`, supported on `1/2 <= |z| <= 2`;
/// * `psi_tilde(z) = phi(z/4) - phi(4z)`, equal to 1 on `supp psi`, so that
///   `psi * psi_tilde = psi` pointwise.
///
/// The construction is infinitely smooth; `smoothness_order` records the
/// number of continuous derivatives the caller relies on.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BumpProfile {
    pub smoothness_order: u32,
}

fn smooth_half(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

impl BumpProfile {
    pub fn new(smoothness_order: u32) -> Result<Self> {
        if smoothness_order < 2 {
            return Err(LabError::InvalidArgument(format!(
                "smoothness_order must be >= 2, got {smoothness_order}"
            )));
        }
        Ok(BumpProfile { smoothness_order })
    }

    /// Plateau cutoff: 1 on `[-1,1]`, 0 outside `(-2,2)`.
    pub fn phi(&self, z: f64) -> f64 {
        let a = z.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            let up = smooth_half(a - 1.0);
            let down = smooth_half(2.0 - a);
            down / (up + down)
        }
    }

    pub fn psi(&self, z: f64) -> f64 {
        self.phi(z) - self.phi(2.0 * z)
    }

    pub fn psi_tilde(&self, z: f64) -> f64 {
        self.phi(0.25 * z) - self.phi(4.0 * z)
    }

    pub fn phi_k(&self, z: f64, k: i64) -> f64 {
        self.phi(z * (-(k as f64)).exp2())
    }

    pub fn psi_k(&self, z: f64, k: i64) -> f64 {
        self.psi(z * (-(k as f64)).exp2())
    }

    pub fn psi_tilde_k(&self, z: f64, k: i64) -> f64 {
        self.psi_tilde(z * (-(k as f64)).exp2())
    }

    /// 1-D smooth ramp `0 -> 1` over `[0, 1]`, shared by the partition-of-unity
    /// constructions (spatial cells, pruning masks).
    pub fn ramp(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            let a = smooth_half(u);
            let b = smooth_half(1.0 - u);
            a / (a + b)
        }
    }

    /// Cell bump `b(u) = ramp(u+1) - ramp(u)`: supported on `(-1, 1)` with
    /// `sum_m b(u - m) = 1` exactly (telescoping).
    pub fn cell_bump(&self, u: f64) -> f64 {
        self.ramp(u + 1.0) - self.ramp(u)
    }
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile { smoothness_order: u32::MAX }
    }
}

/// A dyadic frequency window along one axis: scale `2^k`, optionally the
/// wider `psi_tilde` version.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FreqWindow {
    pub axis: Axis12,
    pub k: i64,
    pub tilde: bool,
}

impl FreqWindow {
    pub fn new(axis: Axis12, k: i64) -> Self {
        FreqWindow { axis, k, tilde: false }
    }

    pub fn tilde(axis: Axis12, k: i64) -> Self {
        FreqWindow { axis, k, tilde: true }
    }
}

/// Littlewood-Paley projection: multiplies the spectrum by `psi_k` (or
/// `psi_tilde_k`) of the chosen axis frequency. Frequencies beyond the grid
/// Nyquist simply receive zero weight.
pub fn project(profile: &BumpProfile, f: &Field2D, w: &FreqWindow) -> Field2D {
    let g = f.grid;
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); g.len()];
    for iy in 0..g.ny {
        let f2 = g.freq_y(iy);
        for ix in 0..g.nx {
            let freq = match w.axis {
                Axis12::One => g.freq_x(ix),
                Axis12::Two => f2,
            };
            let weight = if w.tilde {
                profile.psi_tilde_k(freq, w.k)
            } else {
                profile.psi_k(freq, w.k)
            };
            if weight != 0.0 {
                out[g.index(ix, iy)] = spec[g.index(ix, iy)] * weight;
            }
        }
    }
    Field2D::from_spectral(g, out).expect("projection preserves grid size")
}

/// Low-pass companion: multiplies the spectrum by `phi_k` along an axis
/// (includes the DC bin, unlike a sum of `psi` pieces).
pub fn project_lowpass(profile: &BumpProfile, f: &Field2D, axis: Axis12, k: i64) -> Field2D {
    let g = f.grid;
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); g.len()];
    for iy in 0..g.ny {
        let f2 = g.freq_y(iy);
        for ix in 0..g.nx {
            let freq = match axis {
                Axis12::One => g.freq_x(ix),
                Axis12::Two => f2,
            };
            let weight = profile.phi_k(freq, k);
            if weight != 0.0 {
                out[g.index(ix, iy)] = spec[g.index(ix, iy)] * weight;
            }
        }
    }
    Field2D::from_spectral(g, out).expect("projection preserves grid size")
}

/// Sup over test points of `|1 - sum_{|k| <= K} psi_k|`. Points must lie in
/// the annulus `2^{-K+1} <= |z| <= 2^{K-1}` that the truncated sum covers.
pub fn partition_defect(profile: &BumpProfile, cap: i64, points: &[f64]) -> Result<f64> {
    let lo = (-(cap as f64) + 1.0).exp2();
    let hi = ((cap as f64) - 1.0).exp2();
    let mut worst = 0.0f64;
    for &z in points {
        let a = z.abs();
        if a < lo || a > hi {
            return Err(LabError::InvalidArgument(format!(
                "test point {z} outside covered annulus [{lo:.3e}, {hi:.3e}]"
            )));
        }
        let mut sum = 0.0;
        for k in -cap..=cap {
            sum += profile.psi_k(z, k);
        }
        worst = worst.max((1.0 - sum).abs());
    }
    Ok(worst)
}

/// Pointwise commutator `[cutoff, Delta_k] f = cutoff * Delta_k f -
/// Delta_k (cutoff * f)`, returned as a field.
pub fn commutator(profile: &BumpProfile, f: &Field2D, cutoff: &Field2D, k: i64, axis: Axis12) -> Field2D {
    let w = FreqWindow::new(axis, k);
    let a = project(profile, f, &w).mul_pointwise(cutoff);
    let b = project(profile, &cutoff.mul_pointwise(f), &w);
    a.sub(&b)
}

/// Grid max of `|[cutoff, Delta_k] f| / (2^{-k} (1 + M f))` where `M` is the
/// Hardy-Littlewood maximal function along the projection axis. Bounded by a
/// profile-dependent constant uniformly in `k >= 0`.
pub fn commutator_defect(
    profile: &BumpProfile,
    f: &Field2D,
    cutoff: &Field2D,
    k: i64,
    axis: Axis12,
) -> Result<f64> {
    if k < 0 {
        return Err(LabError::InvalidArgument("commutator_defect requires k >= 0".into()));
    }
    let comm = commutator(profile, f, cutoff, k, axis);
    let maximal = hl_maximal(f, axis);
    let scale = (-(k as f64)).exp2();
    let mut worst = 0.0f64;
    for (c, m) in comm.samples.iter().zip(&maximal.samples) {
        worst = worst.max(c.norm() / (scale * (1.0 + m.re)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_band_limited, Axis, FreqSupportSpec, Grid2D};

    #[test]
    fn bump_plateau_and_support() {
        let p = BumpProfile::new(4).unwrap();
        assert_eq!(p.phi(0.5), 1.0);
        assert_eq!(p.phi(-0.3), 1.0);
        assert_eq!(p.phi(2.5), 0.0);
        assert_eq!(p.psi(1.0), 1.0);
        assert_eq!(p.psi(0.4), 0.0);
        assert_eq!(p.psi(2.1), 0.0);
        for z in [0.6, 1.0, 1.5, 1.9, -0.7, -1.8] {
            assert!((p.psi(z) * p.psi_tilde(z) - p.psi(z)).abs() < 1e-12);
            assert!(p.phi(z) >= 0.0 && p.phi(z) <= 1.0);
        }
        assert!(BumpProfile::new(1).is_err());
    }

    #[test]
    fn telescoping_identity() {
        let p = BumpProfile::default();
        let cap = 6;
        for z in [0.01, 0.3, 1.0, 3.7, 40.0, 100.0, -2.5] {
            let sum: f64 = (-cap..=cap).map(|k| p.psi_k(z, k)).sum();
            let closed = p.phi(z * (-(cap as f64)).exp2()) - p.phi(z * ((cap + 1) as f64).exp2());
            assert!((sum - closed).abs() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn partition_defect_small_inside_and_errors_outside() {
        let p = BumpProfile::default();
        assert!(partition_defect(&p, 10, &[1.0]).unwrap() <= 1e-12);
        assert!(partition_defect(&p, 10, &[3.7]).unwrap() <= 1e-12);
        assert!(partition_defect(&p, 10, &[2.0f64.powi(15)]).is_err());
    }

    #[test]
    fn projection_behaviour() {
        let p = BumpProfile::default();
        let grid = Grid2D::square(64, 1.0).unwrap();
        // single mode at freq 2^3 passes through Delta_3 with weight psi(1)=1
        let mut spec = vec![Complex64::default(); grid.len()];
        spec[grid.index(8, 0)] = Complex64::new(2.0, 1.0);
        let f = Field2D::from_spectral(grid, spec).unwrap();
        let proj = project(&p, &f, &FreqWindow::new(Axis12::One, 3));
        let d = (proj.spectral.as_ref().unwrap()[grid.index(8, 0)] - Complex64::new(2.0, 1.0)).norm();
        assert!(d < 1e-12);

        // disjoint supports annihilate
        let f = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, 8.0), 3).unwrap();
        let a = project(&p, &f, &FreqWindow::new(Axis12::One, 2));
        let b = project(&p, &a, &FreqWindow::new(Axis12::One, 5));
        assert!(b.lp_norm(2.0).unwrap() < 1e-14);

        // psi_tilde absorption
        let d3 = project(&p, &f, &FreqWindow::new(Axis12::One, 3));
        let abs = project(&p, &d3, &FreqWindow::tilde(Axis12::One, 3));
        assert!(abs.sub(&d3).lp_norm(2.0).unwrap() < 1e-12);
    }

    #[test]
    fn commutator_vanishes_for_unit_cutoff_and_zero_field() {
        let p = BumpProfile::default();
        let grid = Grid2D::square(64, 4.0).unwrap();
        let f = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, 3.0), 17).unwrap();
        let ones = Field2D::constant(grid, Complex64::new(1.0, 0.0));
        let c = commutator(&p, &f, &ones, 2, Axis12::One);
        assert!(c.lp_norm(2.0).unwrap() < 1e-12);

        let z = Field2D::zeros(grid);
        let bump = Field2D::from_fn(grid, |x, _| Complex64::new(p.phi(x), 0.0));
        assert_eq!(commutator_defect(&p, &z, &bump, 3, Axis12::One).unwrap(), 0.0);
        assert!(commutator_defect(&p, &z, &bump, -1, Axis12::One).is_err());
    }

    #[test]
    fn commutator_defect_bounded_in_k() {
        let p = BumpProfile::default();
        let grid = Grid2D::square(256, 4.0).unwrap();
        let cutoff = Field2D::from_fn(grid, |x, _| Complex64::new(p.phi(x), 0.0));
        let f = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, 8.0), 5).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=6 {
            let d = commutator_defect(&p, &f, &cutoff, k, Axis12::One).unwrap();
            worst = worst.max(d);
        }
        // uniform bound; the constant depends on the profile, 50 is generous
        assert!(worst.is_finite() && worst < 50.0, "worst = {worst}");
    }
}
