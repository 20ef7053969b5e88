//! Linear multiplier operators: the dyadic pieces of the singular transform
//! along the parabola and their frequency-regime regroupings.

use crate::error::Result;
use crate::grid::{Field2D, Grid2D};
use crate::littlewood_paley::BumpProfile;
use crate::multiplier::{eval_m_family, Family};
use crate::quadrature::{multiplier_row, row_value};
use num_complex::Complex64;
use rayon::prelude::*;

/// Pointwise spectral multiplication by a caller-supplied symbol.
pub fn apply_symbol(f: &Field2D, symbol: impl Fn(f64, f64) -> Complex64) -> Field2D {
    let g = f.grid;
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); g.len()];
    for iy in 0..g.ny {
        let eta = g.freq_y(iy);
        for ix in 0..g.nx {
            let c = spec[g.index(ix, iy)];
            if c != Complex64::default() {
                out[g.index(ix, iy)] = c * symbol(g.freq_x(ix), eta);
            }
        }
    }
    Field2D::from_spectral(g, out).unwrap()
}

/// Full multiplier table `m(2^{-j} nu_p, 2^{-2j} nu_q)` on the grid lattice,
/// FFT-evaluated row by row. Rows are reusable across fields on the same
/// grid, which is what the decay sweeps do.
pub fn hj_symbol_table(profile: &BumpProfile, grid: &Grid2D, j: i64) -> Vec<Complex64> {
    let sj = (-(j as f64)).exp2();
    let spacing = sj / grid.lx;
    let pmax = grid.nx / 2 - 1;
    let kernel = |t: f64| {
        let v = profile.psi(t);
        if v == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(v / t, 0.0)
        }
    };
    let rows: Vec<(usize, Vec<Complex64>)> = (0..grid.ny)
        .into_par_iter()
        .map(|iy| {
            let q = Grid2D::signed_mode(iy, grid.ny);
            let eta = sj * sj * q as f64 / grid.ly;
            (iy, multiplier_row(&kernel, eta, spacing, pmax, 1.35))
        })
        .collect();
    let mut table = vec![Complex64::default(); grid.len()];
    for (iy, row) in rows {
        for ix in 0..grid.nx {
            let p = Grid2D::signed_mode(ix, grid.nx);
            if p.unsigned_abs() as usize <= pmax {
                table[iy * grid.nx + ix] = row_value(&row, pmax, p);
            }
        }
    }
    table
}

/// `H_j f`: spectral multiplication by `m(xi / 2^j, eta / 2^{2j})`.
pub fn apply_hj(profile: &BumpProfile, f: &Field2D, j: i64) -> Result<Field2D> {
    let table = hj_symbol_table(profile, &f.grid, j);
    apply_table(f, &table)
}

pub fn apply_table(f: &Field2D, table: &[Complex64]) -> Result<Field2D> {
    let g = f.grid;
    let spec = f.spectrum();
    let out: Vec<Complex64> = spec.iter().zip(table).map(|(c, m)| c * m).collect();
    Field2D::from_spectral(g, out)
}

/// Truncated `H_P = sum_j H_j` over a declared dyadic window.
pub fn apply_hp(
    profile: &BumpProfile,
    f: &Field2D,
    j_range: std::ops::RangeInclusive<i64>,
) -> Result<Field2D> {
    let g = f.grid;
    let mut table = vec![Complex64::default(); g.len()];
    for j in j_range {
        let t = hj_symbol_table(profile, &g, j);
        for (a, b) in table.iter_mut().zip(t) {
            *a += b;
        }
    }
    apply_table(f, &table)
}

/// One kernel piece `K_k` defined spectrally by
/// `m(xi, eta) psi_{k1}(xi) psi_{k2}(eta)`.
pub struct KernelPiece {
    pub k1: i64,
    pub k2: i64,
    pub field: Field2D,
}

impl KernelPiece {
    pub fn build(profile: &BumpProfile, grid: Grid2D, k1: i64, k2: i64) -> Result<Self> {
        let table = hj_symbol_table(profile, &grid, 0);
        let mut spec = vec![Complex64::default(); grid.len()];
        for iy in 0..grid.ny {
            let eta = grid.freq_y(iy);
            let w2 = profile.psi_k(eta, k2);
            if w2 == 0.0 {
                continue;
            }
            for ix in 0..grid.nx {
                let xi = grid.freq_x(ix);
                let w1 = profile.psi_k(xi, k1);
                if w1 != 0.0 {
                    spec[grid.index(ix, iy)] = table[grid.index(ix, iy)] * w1 * w2;
                }
            }
        }
        Ok(KernelPiece { k1, k2, field: Field2D::from_spectral(grid, spec)? })
    }

    /// Spectral support must stay inside the dyadic rectangle union.
    pub fn support_ok(&self, profile: &BumpProfile) -> bool {
        let g = self.field.grid;
        let spec = self.field.spectral.as_ref().unwrap();
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                if spec[g.index(ix, iy)] != Complex64::default() {
                    let in_band = profile.psi_k(g.freq_x(ix), self.k1) != 0.0
                        && profile.psi_k(g.freq_y(iy), self.k2) != 0.0;
                    if !in_band {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Apply a dyadic-family regrouping (`m_L`, `m_M`, `m_H`) as a linear
/// multiplier; lattice evaluation goes through the certified family sums, so
/// this is meant for modest grids.
pub fn apply_h_regime(
    profile: &BumpProfile,
    f: &Field2D,
    family: Family,
    j_range: std::ops::RangeInclusive<i64>,
    tol: f64,
) -> Result<Field2D> {
    let g = f.grid;
    let spec = f.spectrum();
    let entries: Vec<(usize, Complex64)> = (0..g.len())
        .filter(|&i| spec[i] != Complex64::default())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|i| {
            let (ix, iy) = (i % g.nx, i / g.nx);
            let s = eval_m_family(
                profile,
                family,
                g.freq_x(ix),
                g.freq_y(iy),
                j_range.clone(),
                tol,
            )?;
            Ok((i, spec[i] * s.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Complex64::default(); g.len()];
    for (i, v) in entries {
        out[i] = v;
    }
    Field2D::from_spectral(g, out)
}
