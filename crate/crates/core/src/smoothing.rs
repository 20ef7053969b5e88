//! Empirical decay laboratory: the cheap local-L2 smoothing of the unit
//! scale operator, the high-frequency bilinear decay, the trilinear form's
//! scale decay, and the spatial-cell localization machinery (cell pieces,
//! multiplicative derivatives, local Fourier coefficients).

use crate::error::{LabError, Result};
use crate::fit::{fit_line, DecayFit};
use crate::grid::{
    random_band_limited, random_band_limited_spectrum, trial_seed, Axis, Axis12, Field2D,
    FreqSupportSpec, Grid2D, Rect,
};
use crate::littlewood_paley::{project, project_lowpass, BumpProfile, FreqWindow};
use crate::operators::bilinear::{apply_bilinear, BilinearTable, CutoffZeta, TKernel};
use crate::operators::linear::hj_symbol_table;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Parameter pack for the localization argument. The interval constraints
/// are the ones the argument needs; `validate` enforces them.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub gamma: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub kappa: f64,
    pub delta_prime: f64,
    pub rho_exponent: f64,
}

impl SmoothingParams {
    pub fn delta(&self) -> f64 {
        self.gamma - 0.5
    }

    pub fn tau(&self) -> f64 {
        self.gamma + self.kappa
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(LabError::InvalidArgument(format!("gamma = {} not in (1/2, 1)", self.gamma)));
        }
        if !(self.eps1 > 0.0 && self.eps2 > 0.0) {
            return Err(LabError::InvalidArgument("eps1, eps2 must be positive".into()));
        }
        if !(self.kappa > 5.0 * self.eps2 && self.kappa < 1.0 - self.gamma) {
            return Err(LabError::InvalidArgument(format!(
                "kappa = {} not in (5 eps2, 1 - gamma)",
                self.kappa
            )));
        }
        if !(self.delta_prime > 0.0 && self.rho_exponent > 0.0) {
            return Err(LabError::InvalidArgument("delta_prime, rho_exponent must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            gamma: 0.6,
            eps1: 0.02,
            eps2: 0.02,
            kappa: 0.3,
            delta_prime: 0.1,
            rho_exponent: 0.25,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Local-L2 decay of the unit-scale operator on fields with spectrum
/// concentrated where `|xi| v |eta| ~ lambda`: fits `log2 ||H_0 f||` against
/// `log2 lambda` over the supplied dyadic scales. The unit torus makes the
/// centered unit square the whole domain, so the local norm is evaluated by
/// Plancherel; the multiplier table per scale is shared across trials.
pub fn cheap_smoothing_check(
    profile: &BumpProfile,
    lambdas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DecayFit> {
    if trials == 0 {
        return Err(LabError::InvalidArgument("need at least one trial".into()));
    }
    let mut samples = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let n = ((8.0 * lam) as usize).next_power_of_two().clamp(128, 2048);
        let grid = Grid2D::square(n, 1.0)?;
        if lam >= grid.nyquist_x() {
            return Err(LabError::NyquistExceeded { frequency: lam, nyquist: grid.nyquist_x() });
        }
        let table = hj_symbol_table(profile, &grid, 0);
        let spec = FreqSupportSpec::annulus(Axis::Both, lam);
        let mut norms = Vec::with_capacity(trials);
        for t in 0..trials {
            let coeffs = random_band_limited_spectrum(&grid, &spec, trial_seed(seed, t))?;
            let mut num = 0.0;
            let mut den = 0.0;
            for (c, m) in coeffs.iter().zip(&table) {
                num += (c * m).norm_sqr();
                den += c.norm_sqr();
            }
            norms.push((num / den).sqrt());
        }
        samples.push((lam.log2(), median(norms).log2()));
    }
    fit_line(&samples, trials, seed)
}

/// `L^1(I_0)` norm of `T_0(f1, f2)` via the spectral engine; the fields must
/// be band-limited. Exposed so the error path (zero inputs -> zero norms ->
/// fit refusal) is exercisable directly.
pub fn t0_l1_norm(
    f1: &Field2D,
    f2: &Field2D,
    table: &BilinearTable,
) -> Result<f64> {
    let out = apply_bilinear(f1, f2, table)?;
    out.lp_norm_on(1.0, &Rect::centered_unit())
}

/// Draw the high-frequency test pair: own-axis annulus at `2^k`, low-passed
/// on the other axis, unit L2.
fn band_pair_member(
    profile: &BumpProfile,
    grid: Grid2D,
    axis: Axis12,
    scale: f64,
    low_k: i64,
    seed: u64,
) -> Result<Field2D> {
    let spec = match axis {
        Axis12::One => FreqSupportSpec::annulus(Axis::One, scale),
        Axis12::Two => FreqSupportSpec::annulus(Axis::Two, scale),
    };
    let raw = random_band_limited(grid, &spec, seed)?;
    let other = match axis {
        Axis12::One => Axis12::Two,
        Axis12::Two => Axis12::One,
    };
    let cut = project_lowpass(profile, &raw, other, low_k);
    let n = cut.lp_norm(2.0)?;
    if n == 0.0 {
        return Err(LabError::EmptySet("band pair member vanished".into()));
    }
    Ok(cut.scale(Complex64::new(1.0 / n, 0.0)))
}

/// High-frequency bilinear decay: medians of
/// `||T_0(Delta_k f1, Delta_k f2)||_{L1(I_0)}` over unit-L2 random pairs,
/// fitted against `k` along the diagonal `k1 = k2 = k`. The fitted exponent
/// `sigma = -slope` is asserted positive by the acceptance gate.
pub fn highfreq_decay_fit(
    profile: &BumpProfile,
    ks: &[i64],
    trials: usize,
    seed: u64,
) -> Result<DecayFit> {
    let mut samples = Vec::with_capacity(ks.len());
    for &k in ks {
        if k < 1 {
            return Err(LabError::InvalidArgument("high-frequency sweep needs k >= 1".into()));
        }
        let scale = (k as f64).exp2();
        let n = ((8.0 * scale) as usize).next_power_of_two().clamp(256, 2048);
        let grid = Grid2D::square(n, 1.0)?;
        let pmax = ((2.0 * scale).ceil() as usize).min(grid.nx / 2 - 1);
        let table =
            BilinearTable::from_kernel(TKernel::PsiOverT(profile), 0, &grid, pmax, pmax, 1e-8)?;
        let mut norms = Vec::with_capacity(trials);
        for t in 0..trials {
            let f1 =
                band_pair_member(profile, grid, Axis12::One, scale, 2, trial_seed(seed, 2 * t))?;
            let f2 = band_pair_member(
                profile,
                grid,
                Axis12::Two,
                scale,
                2,
                trial_seed(seed, 2 * t + 1),
            )?;
            let p1 = project(profile, &f1, &FreqWindow::new(Axis12::One, k));
            let p2 = project(profile, &f2, &FreqWindow::new(Axis12::Two, k));
            norms.push(t0_l1_norm(&p1, &p2, &table)?);
        }
        samples.push((k as f64, median(norms).log2()));
    }
    fit_line(&samples, trials, seed)
}

/// Which argument carries the own-axis localization in the trilinear sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalizedArg {
    First,
    Second,
    /// The forbidden pairing: first argument localized in the second axis.
    /// There is no smoothing inequality in this direction; the fitted slope
    /// is recorded, never asserted.
    FirstWrongAxis,
}

/// Trilinear smoothing sweep: `|Lambda(f1, f2, f3)|` with the chosen
/// argument annulus-localized at `lambda` in its own axis, the others random
/// band-limited at matching scales, `f3` normalized in sup norm. Medians
/// over trials, fitted against `lambda`.
pub fn smoothing_fit(
    profile: &BumpProfile,
    lambdas: &[f64],
    which: LocalizedArg,
    trials: usize,
    seed: u64,
) -> Result<DecayFit> {
    let mut samples = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let mut vals = Vec::with_capacity(trials);
        for t in 0..trials {
            let v = lambda_sample(profile, lam, which, trial_seed(seed, t))?;
            vals.push(v);
        }
        samples.push((lam.log2(), median(vals).log2()));
    }
    fit_line(&samples, trials, seed)
}

/// One trilinear sample at scale `lambda`.
fn lambda_sample(
    profile: &BumpProfile,
    lam: f64,
    which: LocalizedArg,
    seed: u64,
) -> Result<f64> {
    // torus 2 x 1: room for the spatial cutoff in x, fine mode lattice
    let nx = ((16.0 * lam) as usize).next_power_of_two().clamp(256, 2048);
    let ny = ((8.0 * lam) as usize).next_power_of_two().clamp(128, 1024);
    let grid = Grid2D::new(nx, ny, 2.0, 1.0)?;
    let zeta = CutoffZeta {
        profile: *profile,
        spatial_halfwidth: 0.45,
        t_lo: 0.5,
        t_hi: 2.0,
    };
    let low = 1i64; // low-pass scale for the transverse axes
    let (f1, f2) = match which {
        LocalizedArg::First => {
            let f1 = band_pair_member(profile, grid, Axis12::One, lam, low, seed)?;
            let raw = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Two, lam), seed ^ 0x5bd1)?;
            let f2 = project_lowpass(profile, &raw, Axis12::One, low);
            let n2 = f2.lp_norm(2.0)?;
            (f1, f2.scale(Complex64::new(1.0 / n2, 0.0)))
        }
        LocalizedArg::Second => {
            let f2 = band_pair_member(profile, grid, Axis12::Two, lam, low, seed)?;
            let raw = random_band_limited(grid, &FreqSupportSpec::ball(Axis::One, lam), seed ^ 0x5bd1)?;
            let f1 = project_lowpass(profile, &raw, Axis12::Two, low);
            let n1 = f1.lp_norm(2.0)?;
            (f1.scale(Complex64::new(1.0 / n1, 0.0)), f2)
        }
        LocalizedArg::FirstWrongAxis => {
            // f1 localized in xi_2 instead of xi_1
            let raw = random_band_limited(grid, &FreqSupportSpec::annulus(Axis::Two, lam), seed)?;
            let f1 = project_lowpass(profile, &raw, Axis12::One, low);
            let n1 = f1.lp_norm(2.0)?;
            let raw2 =
                random_band_limited(grid, &FreqSupportSpec::ball(Axis::Two, lam), seed ^ 0x5bd1)?;
            let f2 = project_lowpass(profile, &raw2, Axis12::One, low);
            let n2 = f2.lp_norm(2.0)?;
            (f1.scale(Complex64::new(1.0 / n1, 0.0)), f2.scale(Complex64::new(1.0 / n2, 0.0)))
        }
    };
    let f3 = {
        let raw = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, lam), seed ^ 0x94d0)?;
        let sup = raw.lp_norm(f64::INFINITY)?;
        raw.scale(Complex64::new(1.0 / sup, 0.0))
    };
    let lam_val = crate::operators::bilinear::trilinear_lambda(&f1, &f2, &f3, &zeta, 1e-7)?;
    Ok(lam_val.norm())
}

/// Modulation-symmetry defect of the trilinear form: the exact invariance is
/// `Lambda(f1, f2, f3) = Lambda(Mod_{0,b} f1, Mod_{a,0} f2, Mod_{-a,-b} f3)`
/// (the trivial modulation pairing); returns the relative gap for
/// grid-commensurate `(a, b)`.
pub fn lambda_modulation_defect(profile: &BumpProfile, seed: u64) -> Result<f64> {
    let lam = 32.0;
    let grid = Grid2D::new(512, 256, 2.0, 1.0)?;
    let zeta =
        CutoffZeta { profile: *profile, spatial_halfwidth: 0.45, t_lo: 0.5, t_hi: 2.0 };
    let f1 = band_pair_member(profile, grid, Axis12::One, lam, 1, seed)?;
    let raw = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Two, lam), seed ^ 0x5bd1)?;
    let f2 = project_lowpass(profile, &raw, Axis12::One, 1);
    let f3 = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, lam), seed ^ 0x94d0)?;
    let base = crate::operators::bilinear::trilinear_lambda(&f1, &f2, &f3, &zeta, 1e-8)?;
    let (a, b) = (3i64, -2i64);
    let modded = crate::operators::bilinear::trilinear_lambda(
        &f1.modulate(0, b),
        &f2.modulate(a, 0),
        &f3.modulate(-a, -b),
        &zeta,
        1e-8,
    )?;
    Ok((base - modded).norm() / base.norm().max(1e-300))
}

/// One spatial cell piece `f * eta(scale (x, y) - m)`, stored on its
/// bounding box.
#[derive(Debug, Clone)]
pub struct CellPiece {
    pub m: (i64, i64),
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
    pub data: Vec<Complex64>,
}

/// Spatial localization of a function pair into cells of side
/// `~ lambda^{-gamma}`, with the interacting-pair index set and anchors.
#[derive(Debug)]
pub struct CellDecomposition {
    pub lambda: f64,
    pub gamma: f64,
    /// integer cells per axis (the scale snapped to the torus)
    pub cells_x: usize,
    pub cells_y: usize,
    pub pieces_1: Vec<CellPiece>,
    pub pieces_2: Vec<CellPiece>,
    /// interacting pairs (index into pieces_1, index into pieces_2)
    pub pairs: Vec<(usize, usize)>,
    /// one feasible (x, y, t) per pair
    pub anchors: Vec<(f64, f64, f64)>,
}

fn cell_pieces(profile: &BumpProfile, f: &Field2D, cells_x: usize, cells_y: usize) -> Vec<CellPiece> {
    let g = f.grid;
    let mut out = Vec::new();
    for my in 0..cells_y {
        for mx in 0..cells_x {
            // bump b((u - m)) with u = cells * (x + L/2) / L, support (m-1, m+1)
            let x_lo = ((mx as f64 - 1.0) * g.nx as f64 / cells_x as f64).ceil() as i64;
            let x_hi = ((mx as f64 + 1.0) * g.nx as f64 / cells_x as f64).floor() as i64;
            let y_lo = ((my as f64 - 1.0) * g.ny as f64 / cells_y as f64).ceil() as i64;
            let y_hi = ((my as f64 + 1.0) * g.ny as f64 / cells_y as f64).floor() as i64;
            let w = (x_hi - x_lo + 1).max(0) as usize;
            let h = (y_hi - y_lo + 1).max(0) as usize;
            let mut data = vec![Complex64::default(); w * h];
            let mut nonzero = false;
            for (jy, iy) in (y_lo..=y_hi).enumerate() {
                let u_y = iy as f64 * cells_y as f64 / g.ny as f64 - my as f64;
                let by = profile.cell_bump(u_y);
                for (jx, ix) in (x_lo..=x_hi).enumerate() {
                    let u_x = ix as f64 * cells_x as f64 / g.nx as f64 - mx as f64;
                    let v = f.samples
                        [g.index(ix.rem_euclid(g.nx as i64) as usize, iy.rem_euclid(g.ny as i64) as usize)]
                        * (profile.cell_bump(u_x) * by);
                    if v != Complex64::default() {
                        nonzero = true;
                    }
                    data[jy * w + jx] = v;
                }
            }
            if nonzero {
                out.push(CellPiece {
                    m: (mx as i64, my as i64),
                    x0: x_lo.rem_euclid(g.nx as i64) as usize,
                    y0: y_lo.rem_euclid(g.ny as i64) as usize,
                    w,
                    h,
                    data,
                });
            }
        }
    }
    out
}

/// Cut both functions into smooth cell pieces at side `~ lambda^{-gamma}`
/// and list the pairs that the cutoff geometry lets interact.
pub fn decompose_cells(
    profile: &BumpProfile,
    f1: &Field2D,
    f2: &Field2D,
    lambda: f64,
    params: &SmoothingParams,
    zeta: &CutoffZeta,
) -> Result<CellDecomposition> {
    params.validate()?;
    let g = f1.grid;
    let side = lambda.powf(-params.gamma);
    let hx = g.lx / g.nx as f64;
    if side < 4.0 * hx || side < 4.0 * g.ly / g.ny as f64 {
        return Err(LabError::CellTooSmall { cell: side, resolution: hx });
    }
    let cells_x = (g.lx / side).round().max(1.0) as usize;
    let cells_y = (g.ly / side).round().max(1.0) as usize;
    let pieces_1 = cell_pieces(profile, f1, cells_x, cells_y);
    let pieces_2 = cell_pieces(profile, f2, cells_x, cells_y);
    let cell_of = |x: f64, y: f64| -> (i64, i64) {
        let ux = (x + 0.5 * g.lx) / g.lx * cells_x as f64;
        let uy = (y + 0.5 * g.ly) / g.ly * cells_y as f64;
        (
            (ux.round() as i64).rem_euclid(cells_x as i64),
            (uy.round() as i64).rem_euclid(cells_y as i64),
        )
    };
    let idx1: std::collections::HashMap<(i64, i64), usize> =
        pieces_1.iter().enumerate().map(|(i, p)| (p.m, i)).collect();
    let idx2: std::collections::HashMap<(i64, i64), usize> =
        pieces_2.iter().enumerate().map(|(i, p)| (p.m, i)).collect();
    // scan the support of zeta: (x, y) in the spatial bump, |t| in the
    // annulus; a pair interacts when (x+t, y) and (x, y+t^2) land in live
    // cells
    let mut pairs = std::collections::BTreeMap::new();
    let n_sp = (4 * cells_x.max(cells_y)).clamp(32, 256);
    let n_t = 128;
    for iy in 0..n_sp {
        let y = -zeta.spatial_halfwidth + 2.0 * zeta.spatial_halfwidth * (iy as f64 + 0.5) / n_sp as f64;
        for ix in 0..n_sp {
            let x = -zeta.spatial_halfwidth
                + 2.0 * zeta.spatial_halfwidth * (ix as f64 + 0.5) / n_sp as f64;
            if zeta.spatial(x) * zeta.spatial(y) == 0.0 {
                continue;
            }
            for side_sign in [-1.0f64, 1.0] {
                for it in 0..n_t {
                    let t = side_sign
                        * (zeta.t_lo + (zeta.t_hi - zeta.t_lo) * (it as f64 + 0.5) / n_t as f64);
                    if zeta.t_factor(t) == 0.0 {
                        continue;
                    }
                    let c1 = cell_of(x + t, y);
                    let c2 = cell_of(x, y + t * t);
                    if let (Some(&i1), Some(&i2)) = (idx1.get(&c1), idx2.get(&c2)) {
                        pairs.entry((i1, i2)).or_insert((x, y, t));
                    }
                }
            }
        }
    }
    let (pairs, anchors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(CellDecomposition {
        lambda,
        gamma: params.gamma,
        cells_x,
        cells_y,
        pieces_1,
        pieces_2,
        pairs,
        anchors,
    })
}

impl CellDecomposition {
    /// Reassemble one side from its pieces (partition-of-unity check).
    pub fn reconstruct(&self, which: Axis12, grid: Grid2D) -> Field2D {
        let pieces = match which {
            Axis12::One => &self.pieces_1,
            Axis12::Two => &self.pieces_2,
        };
        let mut out = vec![Complex64::default(); grid.len()];
        for p in pieces {
            for jy in 0..p.h {
                let iy = (p.y0 + jy) % grid.ny;
                for jx in 0..p.w {
                    let ix = (p.x0 + jx) % grid.nx;
                    out[grid.index(ix, iy)] += p.data[jy * p.w + jx];
                }
            }
        }
        Field2D::from_samples(grid, out).unwrap()
    }
}

/// Multiplicative derivative `D_s^(axis) f = f(. + s e_axis) conj(f)`, the
/// translate realized spectrally (exact trigonometric interpolation).
pub fn mult_derivative(f: &Field2D, s: f64, axis: Axis12) -> Field2D {
    let g = f.grid;
    let spec = f.spectrum();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut shifted = vec![Complex64::default(); g.len()];
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let freq = match axis {
                Axis12::One => g.freq_x(ix),
                Axis12::Two => g.freq_y(iy),
            };
            shifted[g.index(ix, iy)] =
                spec[g.index(ix, iy)] * Complex64::from_polar(1.0, two_pi * freq * s);
        }
    }
    let translated = Field2D::from_spectral(g, shifted).unwrap();
    let samples = translated
        .samples
        .iter()
        .zip(&f.samples)
        .map(|(a, b)| a * b.conj())
        .collect();
    Field2D::from_samples(g, samples).unwrap()
}

/// Local Fourier coefficients of `D_s` applied to a cell piece:
/// `a_k = scale^2 * F[D_s piece](scale * k)` where `scale` is the snapped
/// cell frequency; returned as a dense table over `|k_i| <= k_range`.
pub fn local_fourier_coeffs(
    piece: &CellPiece,
    grid: &Grid2D,
    s: f64,
    axis: Axis12,
    k_range: i64,
    cells_x: usize,
    cells_y: usize,
) -> Vec<Vec<Complex64>> {
    // D_s of the piece, directly on the bounding box (the piece is compactly
    // supported; the translate is evaluated by resampling the box data with
    // linear interpolation at sub-cell accuracy is not enough here, so use
    // the exact grid shift: s snapped to whole grid cells)
    let hx = grid.lx / grid.nx as f64;
    let hy = grid.ly / grid.ny as f64;
    let (sh_x, sh_y) = match axis {
        Axis12::One => ((s / hx).round() as i64, 0i64),
        Axis12::Two => (0i64, (s / hy).round() as i64),
    };
    let w = piece.w;
    let h = piece.h;
    let mut ds = vec![Complex64::default(); w * h];
    for jy in 0..h {
        for jx in 0..w {
            let sx = jx as i64 + sh_x;
            let sy = jy as i64 + sh_y;
            let shifted = if sx >= 0 && (sx as usize) < w && sy >= 0 && (sy as usize) < h {
                piece.data[sy as usize * w + sx as usize]
            } else {
                Complex64::default()
            };
            ds[jy * w + jx] = shifted * piece.data[jy * w + jx].conj();
        }
    }
    let scale_x = cells_x as f64 / grid.lx;
    let scale_y = cells_y as f64 / grid.ly;
    let two_pi = 2.0 * std::f64::consts::PI;
    let cell = hx * hy;
    let mut table = Vec::new();
    for k2 in -k_range..=k_range {
        let mut row = Vec::new();
        for k1 in -k_range..=k_range {
            let mut acc = Complex64::default();
            for jy in 0..h {
                let y = (piece.y0 + jy) as f64 * hy; // absolute position is a phase convention
                for jx in 0..w {
                    let x = (piece.x0 + jx) as f64 * hx;
                    let ph = -two_pi * (scale_x * k1 as f64 * x + scale_y * k2 as f64 * y);
                    acc += ds[jy * w + jx] * Complex64::from_polar(cell, ph);
                }
            }
            row.push(acc * (scale_x * scale_y));
        }
        table.push(row);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> BumpProfile {
        BumpProfile::default()
    }

    #[test]
    fn smoothing_params_validation() {
        assert!(SmoothingParams::default().validate().is_ok());
        let bad = SmoothingParams { gamma: 0.4, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SmoothingParams { kappa: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cheap_smoothing_scales_linearly_and_reproduces() {
        let p = profile();
        let a = cheap_smoothing_check(&p, &[16.0, 32.0, 64.0, 128.0, 256.0, 512.0], 3, 7).unwrap();
        let b = cheap_smoothing_check(&p, &[16.0, 32.0, 64.0, 128.0, 256.0, 512.0], 3, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(a.slope < -0.3 && a.slope > -0.7, "slope = {}", a.slope);
    }

    #[test]
    fn t0_norm_zero_inputs_and_fit_refusal() {
        let p = profile();
        let grid = Grid2D::square(128, 1.0).unwrap();
        let table =
            BilinearTable::from_kernel(TKernel::PsiOverT(&p), 0, &grid, 16, 16, 1e-8).unwrap();
        let z = Field2D::zeros(grid);
        let f2 = band_pair_member(&p, grid, Axis12::Two, 8.0, 2, 3).unwrap();
        let n = t0_l1_norm(&z, &f2, &table).unwrap();
        assert_eq!(n, 0.0);
        // all-zero norms make the log-fit refuse
        let samples: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, (0.0f64).log2())).collect();
        assert!(fit_line(&samples, 1, 0).is_err());
    }

    #[test]
    fn highfreq_fit_runs_and_decays_on_small_range() {
        let p = profile();
        let fit = highfreq_decay_fit(&p, &[2, 3, 4, 5, 6, 7], 6, 11).unwrap();
        assert!(fit.sigma() > 0.0, "sigma = {}", fit.sigma());
    }

    #[test]
    fn trilinear_fit_small_range() {
        let p = profile();
        let fit =
            smoothing_fit(&p, &[4.0, 8.0, 16.0, 32.0, 64.0, 128.0], LocalizedArg::First, 4, 5)
                .unwrap();
        assert!(fit.sigma() > 0.05, "sigma = {}", fit.sigma());
    }

    #[test]
    fn modulation_defect_is_roundoff() {
        let p = profile();
        let d = lambda_modulation_defect(&p, 3).unwrap();
        assert!(d <= 1e-8, "defect = {d}");
    }

    #[test]
    fn cells_reconstruct_and_pair_count() {
        let p = profile();
        let grid = Grid2D::new(512, 256, 2.0, 1.0).unwrap();
        let zeta = CutoffZeta { profile: p, spatial_halfwidth: 0.45, t_lo: 0.5, t_hi: 2.0 };
        let params = SmoothingParams::default();
        let lam = 64.0;
        let f1 = band_pair_member(&p, grid, Axis12::One, lam, 1, 1).unwrap();
        let f2 = band_pair_member(&p, grid, Axis12::Two, lam, 1, 2).unwrap();
        let dec = decompose_cells(&p, &f1, &f2, lam, &params, &zeta).unwrap();
        let rec = dec.reconstruct(Axis12::One, grid);
        let diff = rec.sub(&f1).lp_norm(2.0).unwrap();
        assert!(diff < 1e-10, "reconstruction diff = {diff}");
        // pair count against lambda^{3 gamma}
        let bound = lam.powf(3.0 * params.gamma);
        let ratio = dec.pairs.len() as f64 / bound;
        assert!(ratio < 40.0, "|I| = {}, ratio = {ratio}", dec.pairs.len());
        assert_eq!(dec.pairs.len(), dec.anchors.len());
        // cell too small
        assert!(matches!(
            decompose_cells(&p, &f1, &f2, 1e6, &params, &zeta),
            Err(LabError::CellTooSmall { .. })
        ));
    }

    #[test]
    fn mult_derivative_identities() {
        let grid = Grid2D::square(64, 2.0).unwrap();
        let f = random_band_limited(grid, &FreqSupportSpec::ball(Axis::Both, 4.0), 9).unwrap();
        // s = 0 gives |f|^2
        let d0 = mult_derivative(&f, 0.0, Axis12::One);
        for (a, b) in d0.samples.iter().zip(&f.samples) {
            assert!((a.re - b.norm_sqr()).abs() < 1e-10 && a.im.abs() < 1e-10);
        }
        // pure mode: D_s f is the constant phase e^{2 pi i nu s}
        let mut spec = vec![Complex64::default(); grid.len()];
        spec[grid.index(5, 0)] = Complex64::new(1.0, 0.0);
        let mode = Field2D::from_spectral(grid, spec).unwrap();
        let s = 0.37;
        let d = mult_derivative(&mode, s, Axis12::One);
        let nu = 5.0 / grid.lx;
        let expect = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * nu * s);
        for (v, base) in d.samples.iter().zip(&mode.samples) {
            assert!((v - expect * base.norm_sqr()).norm() < 1e-10);
        }
        // |D_s f| = |f(. + s)| |f|
        let dgen = mult_derivative(&f, 0.5, Axis12::Two);
        let shifted = f.translate_cells(0, -(0.5 / (grid.ly / grid.ny as f64)).round() as i64);
        for (d, (sh, base)) in dgen.samples.iter().zip(shifted.samples.iter().zip(&f.samples)) {
            assert!((d.norm() - sh.norm() * base.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn local_coeffs_zero_piece_and_energy_bound() {
        let p = profile();
        let grid = Grid2D::new(512, 256, 2.0, 1.0).unwrap();
        let zeta = CutoffZeta { profile: p, spatial_halfwidth: 0.45, t_lo: 0.5, t_hi: 2.0 };
        let params = SmoothingParams::default();
        let lam = 64.0;
        let f1 = band_pair_member(&p, grid, Axis12::One, lam, 1, 4).unwrap();
        let f2 = band_pair_member(&p, grid, Axis12::Two, lam, 1, 5).unwrap();
        let dec = decompose_cells(&p, &f1, &f2, lam, &params, &zeta).unwrap();
        let piece = &dec.pieces_1[dec.pieces_1.len() / 2];
        let s = lam.powf(-params.gamma) * 0.3;
        let table =
            local_fourier_coeffs(piece, &grid, s, Axis12::One, 8, dec.cells_x, dec.cells_y);
        let total: f64 = table.iter().flatten().map(|a| a.norm_sqr()).sum();
        assert!(total.is_finite());

        // zero piece -> zero coefficients
        let zp = CellPiece { m: (0, 0), x0: 0, y0: 0, w: 4, h: 4, data: vec![Complex64::default(); 16] };
        let zt = local_fourier_coeffs(&zp, &grid, s, Axis12::One, 4, dec.cells_x, dec.cells_y);
        assert!(zt.iter().flatten().all(|a| a.norm() == 0.0));
    }
}
