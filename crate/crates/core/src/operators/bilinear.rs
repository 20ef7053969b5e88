//! Bilinear operators along the parabola, evaluated through their twisted
//! spectral form: for band-limited inputs,
//!
//! `T_j(f1, f2)^(r, s) = sum_{p,q} m(2^{-j} p/Lx, 2^{-2j} q/Ly)
//!                        f1^(p, s-q) f2^(r-p, q)`
//!
//! which turns the `t`-quadrature into a precomputed multiplier table. The
//! table rows come from the FFT fast path and are certified against the
//! adaptive quadrature before use.

use crate::error::{LabError, Result};
use crate::grid::{Field2D, Grid2D};
use crate::littlewood_paley::{project, BumpProfile, FreqWindow};
use crate::multiplier::eval_m_plus;
use crate::operators::maximal::hl_maximal;
use crate::quadrature::{integrate_adaptive, multiplier_row};
use crate::grid::Axis12;
use num_complex::Complex64;
use rayon::prelude::*;

/// The `t`-kernel of a bilinear piece.
#[derive(Clone, Copy)]
pub enum TKernel<'a> {
    /// Singular `psi(t)/t` (mean zero).
    PsiOverT(&'a BumpProfile),
    /// Positive `psi(t)` (the maximal-operator kernel).
    Psi(&'a BumpProfile),
    /// A custom smooth factor supported in `[-2, 2]`.
    Custom(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl TKernel<'_> {
    fn eval(&self, t: f64) -> f64 {
        match self {
            TKernel::PsiOverT(p) => {
                let v = p.psi(t);
                if v == 0.0 {
                    0.0
                } else {
                    v / t
                }
            }
            TKernel::Psi(p) => p.psi(t),
            TKernel::Custom(f) => f(t),
        }
    }
}

/// Dense multiplier table over mode rectangles `|p| <= pmax`, `|q| <= qmax`.
pub struct BilinearTable {
    pub pmax: usize,
    pub qmax: usize,
    /// `values[(q + qmax) * (2 pmax + 1) + (p + pmax)]`
    pub values: Vec<Complex64>,
    /// certified bound on per-entry evaluation error
    pub entry_error: f64,
}

impl BilinearTable {
    pub fn value(&self, p: i64, q: i64) -> Complex64 {
        let np = 2 * self.pmax + 1;
        self.values[(q + self.qmax as i64) as usize * np + (p + self.pmax as i64) as usize]
    }

    /// Build from a `t`-kernel at dyadic scale `j`: entry `(p, q)` holds
    /// `integral e^{2 pi i (2^{-j} nu_p t + 2^{-2j} nu_q t^2)} g(t) dt`.
    /// Rows are FFT-evaluated and certified against adaptive quadrature at
    /// probe entries; `tol` is the per-entry absolute target.
    pub fn from_kernel(
        kernel: TKernel<'_>,
        j: i64,
        grid: &Grid2D,
        pmax: usize,
        qmax: usize,
        tol: f64,
    ) -> Result<Self> {
        let sj = (-(j as f64)).exp2();
        let spacing = sj / grid.lx;
        let np = 2 * pmax + 1;
        let mut values = vec![Complex64::default(); np * (2 * qmax + 1)];
        let g = |t: f64| Complex64::new(kernel.eval(t), 0.0);
        let rows: Vec<(usize, Vec<Complex64>)> = (0..=2 * qmax)
            .into_par_iter()
            .map(|qi| {
                let q = qi as i64 - qmax as i64;
                let eta = sj * sj * q as f64 / grid.ly;
                (qi, multiplier_row(&g, eta, spacing, pmax, 1.35))
            })
            .collect();
        for (qi, row) in rows {
            values[qi * np..(qi + 1) * np].copy_from_slice(&row);
        }
        let table = BilinearTable { pmax, qmax, values, entry_error: tol };
        table.certify(kernel, j, grid, tol)?;
        Ok(table)
    }

    /// Spot-check FFT rows against the adaptive integrator.
    fn certify(&self, kernel: TKernel<'_>, j: i64, grid: &Grid2D, tol: f64) -> Result<()> {
        let sj = (-(j as f64)).exp2();
        let two_pi = 2.0 * std::f64::consts::PI;
        let probes = [
            (self.pmax as i64, self.qmax as i64),
            (-(self.pmax as i64) / 2, self.qmax as i64 / 3),
            (1.min(self.pmax as i64), -(self.qmax as i64)),
        ];
        for (p, q) in probes {
            let xi = sj * p as f64 / grid.lx;
            let eta = sj * sj * q as f64 / grid.ly;
            let f = |t: f64| {
                let a = kernel.eval(t);
                if a == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::from_polar(a, two_pi * (xi * t + eta * t * t))
                }
            };
            let per_unit = (8.0f64).max(0.75 * (xi.abs() + 4.0 * eta.abs()));
            let (reference, qerr) = integrate_adaptive(
                f,
                &[(-2.0, 2.0)],
                per_unit,
                (tol * 0.1).max(1e-13),
                2_000_000,
            )?;
            let got = self.value(p, q);
            if (got - reference).norm() > tol + qerr {
                return Err(LabError::ToleranceNotMet {
                    requested: tol,
                    achieved: (got - reference).norm(),
                    best: (got.re, got.im),
                });
            }
        }
        Ok(())
    }

    /// Build from an explicit symbol on the mode lattice (the general
    /// twisted-paraproduct entry point).
    pub fn from_symbol(
        symbol: impl Fn(f64, f64) -> Complex64,
        grid: &Grid2D,
        pmax: usize,
        qmax: usize,
    ) -> Self {
        let np = 2 * pmax + 1;
        let mut values = vec![Complex64::default(); np * (2 * qmax + 1)];
        for q in -(qmax as i64)..=qmax as i64 {
            let eta = q as f64 / grid.ly;
            for p in -(pmax as i64)..=pmax as i64 {
                let xi = p as f64 / grid.lx;
                values[(q + qmax as i64) as usize * np + (p + pmax as i64) as usize] =
                    symbol(xi, eta);
            }
        }
        BilinearTable { pmax, qmax, values, entry_error: 0.0 }
    }
}

/// Nonzero spectral entries as (signed p, signed q, coefficient). Entries
/// below 1e-13 of the peak are treated as transform roundoff, not support.
fn sparse_spectrum(f: &Field2D) -> Vec<(i64, i64, Complex64)> {
    let g = &f.grid;
    let spec = f.spectrum();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = peak * 1e-13;
    let mut out = Vec::new();
    for iy in 0..g.ny {
        let q = g.mode_y(iy);
        for ix in 0..g.nx {
            let c = spec[g.index(ix, iy)];
            if c.norm() > floor {
                out.push((g.mode_x(ix), q, c));
            }
        }
    }
    out
}

fn mode_bound(entries: &[(i64, i64, Complex64)], first: bool) -> usize {
    entries
        .iter()
        .map(|e| if first { e.0.unsigned_abs() } else { e.1.unsigned_abs() })
        .max()
        .unwrap_or(0) as usize
}

/// Core bilinear spectral multiply. Requires the output bandwidth to stay
/// inside the grid Nyquist (band-limited inputs; errors otherwise rather
/// than aliasing silently).
pub fn apply_bilinear(f1: &Field2D, f2: &Field2D, table: &BilinearTable) -> Result<Field2D> {
    let g = f1.grid;
    if f2.grid != g {
        return Err(LabError::InvalidArgument("bilinear inputs on different grids".into()));
    }
    let e1 = sparse_spectrum(f1);
    let e2 = sparse_spectrum(f2);
    let out_p = mode_bound(&e1, true) + mode_bound(&e2, true);
    let out_q = mode_bound(&e1, false) + mode_bound(&e2, false);
    if out_p >= g.nx / 2 || out_q >= g.ny / 2 {
        return Err(LabError::NyquistExceeded {
            frequency: out_p.max(out_q) as f64,
            nyquist: (g.nx / 2).min(g.ny / 2) as f64,
        });
    }
    if mode_bound(&e1, true) > table.pmax || mode_bound(&e2, false) > table.qmax {
        return Err(LabError::InvalidArgument(
            "multiplier table does not cover the input spectrum".into(),
        ));
    }
    // fixed four-way split keeps the reduction order independent of the
    // worker count, so outputs are bit-reproducible
    let chunk = e1.len().div_ceil(4).max(1);
    let partials: Vec<Vec<Complex64>> = e1
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = vec![Complex64::default(); g.len()];
            for &(p, q1, c1) in part {
                for &(p2, q, c2) in &e2 {
                    let w = table.value(p, q);
                    if w == Complex64::default() {
                        continue;
                    }
                    let r = p + p2;
                    let s = q1 + q;
                    let ix = r.rem_euclid(g.nx as i64) as usize;
                    let iy = s.rem_euclid(g.ny as i64) as usize;
                    acc[iy * g.nx + ix] += w * c1 * c2;
                }
            }
            acc
        })
        .collect();
    let mut spec = vec![Complex64::default(); g.len()];
    for part in partials {
        for (a, b) in spec.iter_mut().zip(part) {
            *a += b;
        }
    }
    Field2D::from_spectral(g, spec)
}

/// `T_j(f1, f2) = integral f1(x + 2^{-j} t, y) f2(x, y + 2^{-2j} t^2)
/// psi(t)/t dt`, computed spectrally.
pub fn apply_tj(
    profile: &BumpProfile,
    f1: &Field2D,
    f2: &Field2D,
    j: i64,
    tol: f64,
) -> Result<Field2D> {
    let pmax = mode_bound(&sparse_spectrum(f1), true);
    let qmax = mode_bound(&sparse_spectrum(f2), false);
    let table =
        BilinearTable::from_kernel(TKernel::PsiOverT(profile), j, &f1.grid, pmax, qmax, tol)?;
    apply_bilinear(f1, f2, &table)
}

/// High piece `T^{(k)} = sum_j T_j(Delta^{(1)}_{j+k1} f1, Delta^{(2)}_{2j+k2} f2)`
/// over a declared finite `j` window.
pub fn apply_tk_piece(
    profile: &BumpProfile,
    f1: &Field2D,
    f2: &Field2D,
    k1: i64,
    k2: i64,
    j_range: std::ops::RangeInclusive<i64>,
    tol: f64,
) -> Result<Field2D> {
    let mut out = Field2D::zeros(f1.grid);
    for j in j_range {
        let p1 = project(profile, f1, &FreqWindow::new(Axis12::One, j + k1));
        let p2 = project(profile, f2, &FreqWindow::new(Axis12::Two, 2 * j + k2));
        if p1.lp_norm(2.0)? < 1e-300 || p2.lp_norm(2.0)? < 1e-300 {
            continue;
        }
        out = out.add(&apply_tj(profile, &p1, &p2, j, tol)?);
    }
    Ok(out)
}

/// Smooth compactly supported cutoff `zeta(x, y, t) = u(x) u(y) w(t)` with
/// `u` a plateau bump on `[-1, 1]` and `w` the annulus bump on
/// `[-2,-1/2] u [1/2,2]`.
#[derive(Debug, Clone, Copy)]
pub struct CutoffZeta {
    pub profile: BumpProfile,
    /// spatial support half-width (plateau is half of it)
    pub spatial_halfwidth: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl CutoffZeta {
    pub fn standard(profile: BumpProfile) -> Self {
        CutoffZeta { profile, spatial_halfwidth: 1.0, t_lo: 0.5, t_hi: 2.0 }
    }

    pub fn spatial(&self, x: f64) -> f64 {
        self.profile.phi(2.0 * x / self.spatial_halfwidth)
    }

    /// `t`-factor: the annulus bump, vanishing off `t_lo <= |t| <= t_hi`.
    pub fn t_factor(&self, t: f64) -> f64 {
        let a = t.abs();
        if a < self.t_lo || a > self.t_hi {
            0.0
        } else {
            self.profile.psi(t)
        }
    }

    pub fn check_fits(&self, grid: &Grid2D) -> Result<()> {
        if self.spatial_halfwidth >= 0.5 * grid.lx || self.spatial_halfwidth >= 0.5 * grid.ly {
            return Err(LabError::SupportLeakage(format!(
                "cutoff half-width {} does not fit inside the torus {} x {}",
                self.spatial_halfwidth, grid.lx, grid.ly
            )));
        }
        Ok(())
    }
}

/// Localized bilinear operator `T_loc(f1, f2)(x, y) = integral f1(x+t, y)
/// f2(x, y+t^2) zeta(x, y, t) dt`.
pub fn apply_tloc(
    f1: &Field2D,
    f2: &Field2D,
    zeta: &CutoffZeta,
    tol: f64,
) -> Result<Field2D> {
    zeta.check_fits(&f1.grid)?;
    let pmax = mode_bound(&sparse_spectrum(f1), true);
    let qmax = mode_bound(&sparse_spectrum(f2), false);
    let w = |t: f64| zeta.t_factor(t);
    let table = BilinearTable::from_kernel(TKernel::Custom(&w), 0, &f1.grid, pmax, qmax, tol)?;
    let inner = apply_bilinear(f1, f2, &table)?;
    let g = f1.grid;
    let weight = Field2D::from_fn(g, |x, y| {
        Complex64::new(zeta.spatial(x) * zeta.spatial(y), 0.0)
    });
    Ok(inner.mul_pointwise(&weight))
}

/// Trilinear form `Lambda(f1, f2, f3) = integral T_loc(f1, f2) f3 dx dy`.
pub fn trilinear_lambda(
    f1: &Field2D,
    f2: &Field2D,
    f3: &Field2D,
    zeta: &CutoffZeta,
    tol: f64,
) -> Result<Complex64> {
    let tl = apply_tloc(f1, f2, zeta, tol)?;
    let cell = f1.grid.cell_area();
    Ok(tl
        .samples
        .iter()
        .zip(&f3.samples)
        .fold(Complex64::default(), |acc, (a, b)| acc + a * b)
        * cell)
}

/// General twisted paraproduct with a caller-supplied symbol on the
/// frequency lattice.
pub fn apply_paraproduct(
    f1: &Field2D,
    f2: &Field2D,
    symbol: impl Fn(f64, f64) -> Complex64,
) -> Result<Field2D> {
    let pmax = mode_bound(&sparse_spectrum(f1), true);
    let qmax = mode_bound(&sparse_spectrum(f2), false);
    let table = BilinearTable::from_symbol(symbol, &f1.grid, pmax, qmax);
    apply_bilinear(f1, f2, &table)
}

/// Single-scale average `M_j(f1, f2) = integral f1(x+t, y) f2(x, y+t^2)
/// 2^j psi(2^j t) dt`, applied to moduli. The inputs need not be
/// band-limited, so this one runs in the spatial domain: midpoint
/// quadrature in `t` with linear interpolation for the off-grid shifts
/// (the kernel is positive, no cancellation to preserve).
pub fn apply_mj(profile: &BumpProfile, f1: &Field2D, f2: &Field2D, j: i64) -> Result<Field2D> {
    let g = f1.grid;
    if f2.grid != g {
        return Err(LabError::InvalidArgument("bilinear inputs on different grids".into()));
    }
    let a1: Vec<f64> = f1.samples.iter().map(|z| z.norm()).collect();
    let a2: Vec<f64> = f2.samples.iter().map(|z| z.norm()).collect();
    let sj = (-(j as f64)).exp2();
    let n_t = 256usize;
    let mut out = vec![0.0f64; g.len()];
    let rows: Vec<Vec<f64>> = (0..g.ny)
        .into_par_iter()
        .map(|iy| {
            let mut row = vec![0.0f64; g.nx];
            for side in [-1.0f64, 1.0] {
                let (lo, hi) = (0.5 * sj, 2.0 * sj);
                let step = (hi - lo) / n_t as f64;
                for it in 0..n_t {
                    let t = side * (lo + (it as f64 + 0.5) * step);
                    let w = (1.0 / sj) * profile.psi(t / sj) * step;
                    if w == 0.0 {
                        continue;
                    }
                    let t2 = t * t;
                    for ix in 0..g.nx {
                        let v1 = interp_axis1(&a1, &g, g.x(ix) + t, iy);
                        let v2 = interp_axis2(&a2, &g, ix, g.y(iy) + t2);
                        row[ix] += w * v1 * v2;
                    }
                }
            }
            row
        })
        .collect();
    for (iy, row) in rows.into_iter().enumerate() {
        out[iy * g.nx..(iy + 1) * g.nx].copy_from_slice(&row);
    }
    Field2D::from_samples(g, out.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

fn interp_axis1(vals: &[f64], g: &Grid2D, x: f64, iy: usize) -> f64 {
    let hx = g.lx / g.nx as f64;
    let pos = (x + 0.5 * g.lx) / hx;
    let i0 = pos.floor() as i64;
    let frac = pos - i0 as f64;
    let a = vals[iy * g.nx + i0.rem_euclid(g.nx as i64) as usize];
    let b = vals[iy * g.nx + (i0 + 1).rem_euclid(g.nx as i64) as usize];
    a * (1.0 - frac) + b * frac
}

fn interp_axis2(vals: &[f64], g: &Grid2D, ix: usize, y: f64) -> f64 {
    let hy = g.ly / g.ny as f64;
    let pos = (y + 0.5 * g.ly) / hy;
    let i0 = pos.floor() as i64;
    let frac = pos - i0 as f64;
    let a = vals[i0.rem_euclid(g.ny as i64) as usize * g.nx + ix];
    let b = vals[(i0 + 1).rem_euclid(g.ny as i64) as usize * g.nx + ix];
    a * (1.0 - frac) + b * frac
}

/// Bilinear maximal function: pointwise sup of `M_j` over the dyadic window.
pub fn bilinear_maximal(
    profile: &BumpProfile,
    f1: &Field2D,
    f2: &Field2D,
    j_range: std::ops::RangeInclusive<i64>,
) -> Result<Field2D> {
    let g = f1.grid;
    let mut best = vec![0.0f64; g.len()];
    for j in j_range {
        let mj = apply_mj(profile, f1, f2, j)?;
        for (b, v) in best.iter_mut().zip(&mj.samples) {
            *b = b.max(v.re);
        }
    }
    Field2D::from_samples(g, best.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowMixedPart {
    Low,
    Mixed,
}

/// Pointwise twisted evaluation
/// `out(x,y) = sum_w w(p,q) F1(p, y) F2(x, q) e^{2 pi i (nu_p x + nu_q y)}`
/// over an explicit small weight list, valid for inputs that are not
/// band-limited (output lands in physical space, no alias bookkeeping).
pub fn twisted_pointwise(
    f1: &Field2D,
    f2: &Field2D,
    weights: &[(i64, i64, Complex64)],
) -> Result<Field2D> {
    let g = f1.grid;
    if f2.grid != g {
        return Err(LabError::InvalidArgument("bilinear inputs on different grids".into()));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    // partial transforms for just the needed modes
    let mut p_modes: Vec<i64> = weights.iter().map(|w| w.0).collect();
    p_modes.sort_unstable();
    p_modes.dedup();
    let mut q_modes: Vec<i64> = weights.iter().map(|w| w.1).collect();
    q_modes.sort_unstable();
    q_modes.dedup();
    let mut f1_part = std::collections::HashMap::new();
    for &p in &p_modes {
        let mut col = vec![Complex64::default(); g.ny];
        for iy in 0..g.ny {
            let mut acc = Complex64::default();
            for ix in 0..g.nx {
                let ph = -two_pi * p as f64 * g.x(ix) / g.lx;
                acc += f1.samples[g.index(ix, iy)] * Complex64::from_polar(1.0, ph);
            }
            col[iy] = acc / g.nx as f64;
        }
        f1_part.insert(p, col);
    }
    let mut f2_part = std::collections::HashMap::new();
    for &q in &q_modes {
        let mut row = vec![Complex64::default(); g.nx];
        for ix in 0..g.nx {
            let mut acc = Complex64::default();
            for iy in 0..g.ny {
                let ph = -two_pi * q as f64 * g.y(iy) / g.ly;
                acc += f2.samples[g.index(ix, iy)] * Complex64::from_polar(1.0, ph);
            }
            row[ix] = acc / g.ny as f64;
        }
        f2_part.insert(q, row);
    }
    let mut out = vec![Complex64::default(); g.len()];
    for &(p, q, w) in weights {
        if w == Complex64::default() {
            continue;
        }
        let col = &f1_part[&p];
        let row = &f2_part[&q];
        for iy in 0..g.ny {
            let phy = two_pi * q as f64 * g.y(iy) / g.ly;
            let cy = col[iy] * Complex64::from_polar(1.0, phy) * w;
            for ix in 0..g.nx {
                let phx = two_pi * p as f64 * g.x(ix) / g.lx;
                out[g.index(ix, iy)] += cy * row[ix] * Complex64::from_polar(1.0, phx);
            }
        }
    }
    Field2D::from_samples(g, out)
}

/// Grid sup of `M_0^{L or M}(f1, f2) / (M^(1) f1 * M^(2) f2 + tiny)`:
/// the pointwise domination of the low/mixed single-scale pieces by the
/// product of axis maximal functions.
pub fn pointwise_domination_ratio(
    profile: &BumpProfile,
    f1: &Field2D,
    f2: &Field2D,
    part: LowMixedPart,
    tol: f64,
) -> Result<f64> {
    let g = f1.grid;
    let a1 = modulus_field(f1);
    let a2 = modulus_field(f2);
    // weight support: the low kernel phi(xi) phi(eta) m_+ lives on |nu| <= 2
    // per axis; the mixed kernel on the extreme-ratio lattice rows (k >= 1
    // with a 100-scale gap leaves only the near-DC column at grid spacing)
    let pcap = (2.0 * g.lx).ceil() as i64;
    let qcap = (2.0 * g.ly).ceil() as i64;
    let mut weights = Vec::new();
    match part {
        LowMixedPart::Low => {
            for p in -pcap..=pcap {
                let xi = p as f64 / g.lx;
                for q in -qcap..=qcap {
                    let eta = q as f64 / g.ly;
                    let w = profile.phi(xi) * profile.phi(eta);
                    if w != 0.0 {
                        let m = eval_m_plus(profile, xi, eta, tol)?;
                        weights.push((p, q, m.value * w));
                    }
                }
            }
        }
        LowMixedPart::Mixed => {
            let pmax = (g.nx / 2 - 1) as i64;
            let qmax = (g.ny / 2 - 1) as i64;
            let mixed_weight = |xi: f64, eta: f64| -> f64 {
                let mut acc = 0.0;
                if xi != 0.0 {
                    let base = xi.abs().log2();
                    for k1 in [base.floor() as i64, base.floor() as i64 + 1] {
                        if k1 >= 1 {
                            acc += profile.psi_k(xi, k1) * profile.phi_k(eta, k1 - 100);
                        }
                    }
                }
                if eta != 0.0 {
                    let base = eta.abs().log2();
                    for k2 in [base.floor() as i64, base.floor() as i64 + 1] {
                        if k2 >= 1 {
                            acc += profile.phi_k(xi, k2 - 100) * profile.psi_k(eta, k2);
                        }
                    }
                }
                acc
            };
            for p in -pmax..=pmax {
                let xi = p as f64 / g.lx;
                let w = mixed_weight(xi, 0.0);
                if w != 0.0 {
                    weights.push((p, 0, eval_m_plus(profile, xi, 0.0, tol)?.value * w));
                }
            }
            for q in -qmax..=qmax {
                if q == 0 {
                    continue;
                }
                let eta = q as f64 / g.ly;
                let w = mixed_weight(0.0, eta);
                if w != 0.0 {
                    weights.push((0, q, eval_m_plus(profile, 0.0, eta, tol)?.value * w));
                }
            }
        }
    }
    let piece = twisted_pointwise(&a1, &a2, &weights)?;
    let m1 = hl_maximal(&a1, Axis12::One);
    let m2 = hl_maximal(&a2, Axis12::Two);
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        let denom = m1.samples[i].re * m2.samples[i].re + 1e-12;
        worst = worst.max(piece.samples[i].norm() / denom);
    }
    Ok(worst)
}

fn modulus_field(f: &Field2D) -> Field2D {
    Field2D::from_samples(
        f.grid,
        f.samples.iter().map(|z| Complex64::new(z.norm(), 0.0)).collect(),
    )
    .unwrap()
}

/// Brute-force oracle used by the tests: dense `t`-sum with exact
/// trigonometric interpolation from the sparse spectra.
pub fn tj_brute_force(
    profile: &BumpProfile,
    f1: &Field2D,
    f2: &Field2D,
    j: i64,
    x: f64,
    y: f64,
    nodes: usize,
) -> Complex64 {
    let e1 = sparse_spectrum(f1);
    let e2 = sparse_spectrum(f2);
    let g = f1.grid;
    let two_pi = 2.0 * std::f64::consts::PI;
    let sj = (-(j as f64)).exp2();
    let eval = |entries: &[(i64, i64, Complex64)], xx: f64, yy: f64| {
        entries.iter().fold(Complex64::default(), |acc, &(p, q, c)| {
            acc + c
                * Complex64::from_polar(
                    1.0,
                    two_pi * (p as f64 * xx / g.lx + q as f64 * yy / g.ly),
                )
        })
    };
    let mut acc = Complex64::default();
    for (a, b) in [(-2.0f64, -0.5f64), (0.5, 2.0)] {
        let h = (b - a) / nodes as f64;
        for i in 0..=nodes {
            let t = a + i as f64 * h;
            let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
            let k = profile.psi(t) / t;
            if k == 0.0 {
                continue;
            }
            let v1 = eval(&e1, x + sj * t, y);
            let v2 = eval(&e2, x, y + sj * sj * t * t);
            acc += v1 * v2 * (k * w * h);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_band_limited, Axis, FreqSupportSpec};
    use crate::littlewood_paley::project_lowpass;

    fn profile() -> BumpProfile {
        BumpProfile::default()
    }

    fn test_grid() -> Grid2D {
        Grid2D::square(128, 1.0).unwrap()
    }

    /// Random field confined to `|freq| ~ scale` on its own axis and below
    /// `low` on the other, unit L2 norm.
    fn band_field(g: Grid2D, axis: Axis12, scale: f64, low: i64, seed: u64) -> Field2D {
        let spec = match axis {
            Axis12::One => FreqSupportSpec::annulus(Axis::One, scale),
            Axis12::Two => FreqSupportSpec::annulus(Axis::Two, scale),
        };
        let raw = random_band_limited(g, &spec, seed).unwrap();
        let other = match axis {
            Axis12::One => Axis12::Two,
            Axis12::Two => Axis12::One,
        };
        let cut = project_lowpass(&BumpProfile::default(), &raw, other, low);
        let n = cut.lp_norm(2.0).unwrap();
        cut.scale(Complex64::new(1.0 / n, 0.0))
    }

    #[test]
    fn zero_and_constant_inputs() {
        let p = profile();
        let g = test_grid();
        let f2 = band_field(g, Axis12::Two, 4.0, 2, 1);
        let z = Field2D::zeros(g);
        let out = apply_tj(&p, &z, &f2, 0, 1e-9).unwrap();
        assert!(out.lp_norm(2.0).unwrap() < 1e-14);

        // constants: odd kernel integrates to zero
        let c1 = Field2D::constant(g, Complex64::new(2.0, 0.0));
        let c2 = Field2D::constant(g, Complex64::new(-1.0, 1.0));
        let out = apply_tj(&p, &c1, &c2, 0, 1e-9).unwrap();
        assert!(out.lp_norm(f64::INFINITY).unwrap() < 1e-10);
    }

    #[test]
    fn matches_brute_force_at_probe_points() {
        let p = profile();
        let g = test_grid();
        let f1 = band_field(g, Axis12::One, 8.0, 2, 3);
        let f2 = band_field(g, Axis12::Two, 8.0, 2, 4);
        let out = apply_tj(&p, &f1, &f2, 0, 1e-9).unwrap();
        for &(ix, iy) in &[(0usize, 0usize), (17, 93), (64, 5), (100, 100)] {
            let (x, y) = (g.x(ix), g.y(iy));
            let brute = tj_brute_force(&p, &f1, &f2, 0, x, y, 100_000);
            let got = out.samples[g.index(ix, iy)];
            assert!((got - brute).norm() < 1e-6, "({ix},{iy}): {got} vs {brute}");
        }
    }

    #[test]
    fn bilinearity_in_each_argument() {
        let p = profile();
        let g = test_grid();
        let f1a = band_field(g, Axis12::One, 6.0, 2, 5);
        let f1b = band_field(g, Axis12::One, 6.0, 2, 6);
        let f2 = band_field(g, Axis12::Two, 6.0, 2, 7);
        let a = Complex64::new(0.3, -1.1);
        let combo = f1a.scale(a).add(&f1b);
        let lhs = apply_tj(&p, &combo, &f2, 1, 1e-10).unwrap();
        let rhs = apply_tj(&p, &f1a, &f2, 1, 1e-10)
            .unwrap()
            .scale(a)
            .add(&apply_tj(&p, &f1b, &f2, 1, 1e-10).unwrap());
        assert!(lhs.sub(&rhs).lp_norm(2.0).unwrap() < 1e-9);
    }

    #[test]
    fn translation_covariance_on_the_torus() {
        let p = profile();
        let g = test_grid();
        let f1 = band_field(g, Axis12::One, 5.0, 2, 11);
        let f2 = band_field(g, Axis12::Two, 5.0, 2, 12);
        let direct = apply_tj(&p, &f1.translate_cells(9, -4), &f2.translate_cells(9, -4), 0, 1e-10)
            .unwrap();
        let shifted = apply_tj(&p, &f1, &f2, 0, 1e-10).unwrap().translate_cells(9, -4);
        assert!(direct.sub(&shifted).lp_norm(2.0).unwrap() < 1e-10);
    }

    #[test]
    fn trivial_modulation_symmetry() {
        let p = profile();
        let g = test_grid();
        let f1 = band_field(g, Axis12::One, 5.0, 2, 21);
        let f2 = band_field(g, Axis12::Two, 5.0, 2, 22);
        let (p0, q0) = (7i64, -5i64);
        // T(Mod_{0,q0} f1, Mod_{p0,0} f2) = Mod_{p0,q0} T(f1, f2)
        let lhs = apply_tj(&p, &f1.modulate(0, q0), &f2.modulate(p0, 0), 0, 1e-10).unwrap();
        let rhs = apply_tj(&p, &f1, &f2, 0, 1e-10).unwrap().modulate(p0, q0);
        assert!(lhs.sub(&rhs).lp_norm(2.0).unwrap() < 1e-9);
    }

    #[test]
    fn paraproduct_unit_symbol_is_pointwise_product() {
        let g = test_grid();
        let f1 = band_field(g, Axis12::One, 6.0, 2, 31);
        let f2 = band_field(g, Axis12::Two, 6.0, 2, 32);
        let out = apply_paraproduct(&f1, &f2, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        let prod = f1.mul_pointwise(&f2);
        assert!(out.sub(&prod).lp_norm(2.0).unwrap() < 1e-10);
    }

    #[test]
    fn paraproduct_one_axis_symbol_on_single_modes() {
        let g = test_grid();
        let mut s1 = vec![Complex64::default(); g.len()];
        s1[g.index(5, 3)] = Complex64::new(1.0, 0.0);
        let f1 = Field2D::from_spectral(g, s1).unwrap();
        let mut s2 = vec![Complex64::default(); g.len()];
        s2[g.index(2, 7)] = Complex64::new(1.0, 0.0);
        let f2 = Field2D::from_spectral(g, s2).unwrap();
        // symbol depending only on xi multiplies by its value at f1's mode
        let out = apply_paraproduct(&f1, &f2, |xi, _| Complex64::new(0.0, xi)).unwrap();
        let expect = f1.mul_pointwise(&f2).scale(Complex64::new(0.0, 5.0));
        assert!(out.sub(&expect).lp_norm(2.0).unwrap() < 1e-12);
    }

    #[test]
    fn mj_constant_inputs_give_kernel_mass() {
        let p = profile();
        let g = test_grid();
        let one = Field2D::constant(g, Complex64::new(1.0, 0.0));
        let mass = {
            let f = |t: f64| Complex64::new(p.psi(t), 0.0);
            integrate_adaptive(f, &[(-2.0, 2.0)], 16.0, 1e-12, 4096).unwrap().0.re
        };
        for j in [-1i64, 0, 2] {
            let mj = apply_mj(&p, &one, &one, j).unwrap();
            for v in mj.samples.iter().step_by(997) {
                assert!((v.re - mass).abs() < 1e-6, "j={j}: {} vs {mass}", v.re);
            }
        }
    }

    #[test]
    fn maximal_dominates_each_scale() {
        let p = profile();
        let g = test_grid();
        let f1 = random_band_limited(g, &FreqSupportSpec::ball(Axis::One, 6.0), 41).unwrap();
        let f2 = random_band_limited(g, &FreqSupportSpec::ball(Axis::Two, 6.0), 42).unwrap();
        let sup = bilinear_maximal(&p, &f1, &f2, -1..=2).unwrap();
        let m0 = apply_mj(&p, &f1, &f2, 0).unwrap();
        for (s, v) in sup.samples.iter().zip(&m0.samples) {
            assert!(s.re >= v.re - 1e-9);
        }
    }

    #[test]
    fn aliasing_is_rejected() {
        let p = profile();
        let g = Grid2D::square(32, 1.0).unwrap();
        let f1 = random_band_limited(g, &FreqSupportSpec::annulus(Axis::One, 7.0), 1).unwrap();
        let f2 = random_band_limited(g, &FreqSupportSpec::annulus(Axis::Two, 7.0), 2).unwrap();
        assert!(matches!(
            apply_tj(&p, &f1, &f2, 0, 1e-8),
            Err(LabError::NyquistExceeded { .. })
        ));
    }
}
