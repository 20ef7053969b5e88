//! The oscillatory multiplier `m(xi, eta) = p.v. integral e^{2 pi i (xi t +
//! eta t^2)} psi(t)/t dt` and its dyadic family, with certified adaptive
//! quadrature and the three phase-regime diagnostics.
//!
//! The principal value is vacuous here because `supp psi` excludes the
//! origin; the kernel `psi(t)/t` is smooth on `1/2 <= |t| <= 2`.

use crate::error::{LabError, Result};
use crate::fit::{fit_line, DecayFit};
use crate::littlewood_paley::BumpProfile;
use crate::quadrature::integrate_adaptive;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The scale-gap separating the mixed regime, fixed by the decomposition.
/// A constant of the construction, not a tunable.
pub const REGIME_GAP: i64 = 100;

/// Hard ceiling on |xi| v |eta| for pointwise quadrature: beyond this we
/// refuse rather than silently degrade.
pub const MAX_POINT_FREQ: f64 = 16384.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// The singular-kernel multiplier with `psi(t)/t`.
    M,
    /// The positive-kernel sibling with `psi(t) dt`.
    MPlus,
    /// Low-frequency dyadic sum `m_L`.
    Low,
    /// Mixed-frequency dyadic sum `m_M` (scale gap >= 100).
    Mixed,
    /// High-frequency dyadic sum `m_H` (scale gap < 100).
    High,
    /// Single high piece `m_k`.
    Piece { k1: i64, k2: i64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MultiplierSample {
    pub xi: f64,
    pub eta: f64,
    pub value: Complex64,
    pub abs_error_bound: f64,
    pub family: Family,
}

/// Three-way phase-regime classification of a dyadic index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    Low,
    Mixed,
    High,
}

/// Total classification: `Low` iff `k1 v k2 <= 0`, otherwise split by the
/// scale gap `|k1 - k2|` against [`REGIME_GAP`].
pub fn classify_regime(k1: i64, k2: i64) -> RegimeTag {
    if k1.max(k2) <= 0 {
        RegimeTag::Low
    } else if (k1 - k2).abs() >= REGIME_GAP {
        RegimeTag::Mixed
    } else {
        RegimeTag::High
    }
}

fn check_point(xi: f64, eta: f64) -> Result<()> {
    if xi.abs().max(eta.abs()) > MAX_POINT_FREQ {
        return Err(LabError::InvalidArgument(format!(
            "|xi| v |eta| = {:.3e} beyond the pointwise quadrature ceiling {MAX_POINT_FREQ}",
            xi.abs().max(eta.abs())
        )));
    }
    Ok(())
}

fn oscillatory_eval(
    profile: &BumpProfile,
    xi: f64,
    eta: f64,
    tol: f64,
    singular: bool,
) -> Result<(Complex64, f64)> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let f = move |t: f64| {
        let amp = if singular { profile.psi(t) / t } else { profile.psi(t) };
        if amp == 0.0 {
            Complex64::default()
        } else {
            Complex64::from_polar(amp, two_pi * (xi * t + eta * t * t))
        }
    };
    // phase derivative is 2 pi (xi + 2 eta t), |t| <= 2
    let per_unit = (8.0f64).max(0.75 * (xi.abs() + 4.0 * eta.abs()));
    let budget = (per_unit as usize * 16).max(4096);
    integrate_adaptive(f, &[(-2.0, -0.5), (0.5, 2.0)], per_unit, tol, budget)
}

/// Certified evaluation of `m(xi, eta)`.
pub fn eval_m(profile: &BumpProfile, xi: f64, eta: f64, tol: f64) -> Result<MultiplierSample> {
    check_point(xi, eta)?;
    let (value, err) = oscillatory_eval(profile, xi, eta, tol, true)?;
    Ok(MultiplierSample { xi, eta, value, abs_error_bound: err, family: Family::M })
}

/// Certified evaluation of the positive-kernel `m_+(xi, eta)`.
pub fn eval_m_plus(profile: &BumpProfile, xi: f64, eta: f64, tol: f64) -> Result<MultiplierSample> {
    check_point(xi, eta)?;
    let (value, err) = oscillatory_eval(profile, xi, eta, tol, false)?;
    Ok(MultiplierSample { xi, eta, value, abs_error_bound: err, family: Family::MPlus })
}

/// `integral |psi|` and `integral |t| |psi|`, for non-oscillatory tail bounds.
fn kernel_l1_moments(profile: &BumpProfile) -> (f64, f64) {
    let f0 = |t: f64| Complex64::new(profile.psi(t).abs(), 0.0);
    let f1 = |t: f64| Complex64::new(t.abs() * profile.psi(t).abs(), 0.0);
    let (i0, _) = integrate_adaptive(f0, &[(-2.0, -0.5), (0.5, 2.0)], 16.0, 1e-10, 4096).unwrap();
    let (i1, _) = integrate_adaptive(f1, &[(-2.0, -0.5), (0.5, 2.0)], 16.0, 1e-10, 4096).unwrap();
    (i0.re, i1.re)
}

/// Non-oscillatory certified bound `|m(xi,eta)| <= 2 pi (I0 |xi| + I1 |eta|)`
/// from `|e^{i theta} - 1| <= |theta|` and the odd kernel.
fn small_arg_bound(moments: (f64, f64), xi: f64, eta: f64) -> f64 {
    2.0 * std::f64::consts::PI * (moments.0 * xi.abs() + moments.1 * eta.abs())
}

// crude certified van der Corput bound used only for skipped far terms
fn vdc_bound(eta: f64) -> f64 {
    if eta.abs() < 1.0 {
        f64::INFINITY
    } else {
        32.0 / eta.abs().sqrt()
    }
}

/// Dyadic-family evaluation: truncated sum over `j_range`, with the
/// truncation / skip error folded into `abs_error_bound` via the regime
/// estimates.
pub fn eval_m_family(
    profile: &BumpProfile,
    family: Family,
    xi: f64,
    eta: f64,
    j_range: std::ops::RangeInclusive<i64>,
    tol: f64,
) -> Result<MultiplierSample> {
    match family {
        Family::M => return eval_m(profile, xi, eta, tol),
        Family::MPlus => return eval_m_plus(profile, xi, eta, tol),
        _ => {}
    }
    let moments = kernel_l1_moments(profile);
    let mut value = Complex64::default();
    let mut err = 0.0f64;
    let add_term = |j: i64, w: f64, value_acc: &mut Complex64, err_acc: &mut f64| -> Result<()> {
        let s = 2.0f64.powi(-(j as i32));
        let (a, b) = (s * xi, s * s * eta);
        if a.abs().max(b.abs()) > MAX_POINT_FREQ {
            // skip with certified bound (stationary-amplitude estimate)
            *err_acc += w.abs() * vdc_bound(b).min(small_arg_bound(moments, a, b)).min(4.0);
            return Ok(());
        }
        let sample = eval_m(profile, a, b, tol * 0.1)?;
        *value_acc += sample.value * w;
        *err_acc += sample.abs_error_bound * w.abs();
        Ok(())
    };

    match family {
        Family::Low => {
            for j in j_range.clone() {
                let s = 2.0f64.powi(-(j as i32));
                let w = profile.phi(s * xi) * profile.phi(s * s * eta);
                if w != 0.0 {
                    add_term(j, w, &mut value, &mut err)?;
                }
            }
            // tail above the window: non-oscillatory geometric bound
            let jhi = *j_range.end();
            let s = 2.0f64.powi(-(jhi as i32 + 1));
            err += 2.0
                * std::f64::consts::PI
                * (moments.0 * 2.0 * s * xi.abs() + moments.1 * s * s * eta.abs() * 4.0 / 3.0);
        }
        Family::Mixed => {
            for j in j_range.clone() {
                let s = 2.0f64.powi(-(j as i32));
                let (a, b) = (s * xi, s * s * eta);
                // branch 1: psi_{k1}(a) phi_{k1-100}(b), k1 >= 1
                if a != 0.0 {
                    let base = a.abs().log2();
                    for k1 in [base.floor() as i64, base.floor() as i64 + 1] {
                        if k1 >= 1 {
                            let w = profile.psi_k(a, k1) * profile.phi_k(b, k1 - REGIME_GAP);
                            if w != 0.0 {
                                add_term(j, w, &mut value, &mut err)?;
                            }
                        }
                    }
                }
                // branch 2: phi_{k2-100}(a) psi_{k2}(b), k2 >= 1
                if b != 0.0 {
                    let base = b.abs().log2();
                    for k2 in [base.floor() as i64, base.floor() as i64 + 1] {
                        if k2 >= 1 {
                            let w = profile.phi_k(a, k2 - REGIME_GAP) * profile.psi_k(b, k2);
                            if w != 0.0 {
                                add_term(j, w, &mut value, &mut err)?;
                            }
                        }
                    }
                }
            }
        }
        Family::High => {
            for j in j_range.clone() {
                let s = 2.0f64.powi(-(j as i32));
                let (a, b) = (s * xi, s * s * eta);
                if a == 0.0 || b == 0.0 {
                    continue;
                }
                let b1 = a.abs().log2().floor() as i64;
                let b2 = b.abs().log2().floor() as i64;
                for k1 in [b1, b1 + 1] {
                    for k2 in [b2, b2 + 1] {
                        if k1.max(k2) > 0 && (k1 - k2).abs() < REGIME_GAP {
                            let w = profile.psi_k(a, k1) * profile.psi_k(b, k2);
                            if w != 0.0 {
                                add_term(j, w, &mut value, &mut err)?;
                            }
                        }
                    }
                }
            }
        }
        Family::Piece { k1, k2 } => {
            for j in j_range.clone() {
                let s = 2.0f64.powi(-(j as i32));
                let (a, b) = (s * xi, s * s * eta);
                let w = profile.psi_k(a, k1) * profile.psi_k(b, k2);
                if w != 0.0 {
                    add_term(j, w, &mut value, &mut err)?;
                }
            }
        }
        Family::M | Family::MPlus => unreachable!(),
    }
    Ok(MultiplierSample { xi, eta, value, abs_error_bound: err, family })
}

/// Least-squares slope of `log2 |m|` against `log2 lambda` along a frequency
/// path. Errors when fewer than six scales are supplied or the multiplier is
/// numerically zero along the path.
pub fn regime_decay_fit(
    profile: &BumpProfile,
    path: impl Fn(f64) -> (f64, f64),
    lambdas: &[f64],
    tol: f64,
) -> Result<DecayFit> {
    if lambdas.len() < 6 {
        return Err(LabError::InvalidArgument(format!(
            "need at least 6 scales for a regime fit, got {}",
            lambdas.len()
        )));
    }
    let mut samples = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let (xi, eta) = path(lam);
        let s = eval_m(profile, xi, eta, tol)?;
        let mag = s.value.norm();
        if mag <= 10.0 * s.abs_error_bound.max(1e-15) {
            return Err(LabError::DegenerateFit(format!(
                "multiplier numerically zero along path at lambda = {lam} (|m| = {mag:.3e})"
            )));
        }
        samples.push((lam.log2(), mag.log2()));
    }
    fit_line(&samples, 1, 0)
}

const STENCILS: [&[(i64, f64)]; 4] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
];

/// Sup over the sample grid of
/// `|d^alpha_xi d^beta_eta m_family| * (|xi| + |eta|^{1/2})^{alpha + 2 beta}`
/// with central finite differences of step `fd_step`.
#[allow(clippy::too_many_arguments)]
pub fn symbol_bound_scan(
    profile: &BumpProfile,
    family: Family,
    alpha: usize,
    beta: usize,
    points: &[(f64, f64)],
    fd_step: f64,
    j_range: std::ops::RangeInclusive<i64>,
    tol: f64,
) -> Result<f64> {
    if alpha + beta > 3 {
        return Err(LabError::InvalidArgument(
            "finite differences supported up to total order 3".into(),
        ));
    }
    if fd_step > 0.1 {
        return Err(LabError::InvalidArgument(format!(
            "fd_step = {fd_step} too large relative to the unit phase scale of the family"
        )));
    }
    if fd_step <= 0.0 {
        return Err(LabError::InvalidArgument("fd_step must be positive".into()));
    }
    let sx = STENCILS[alpha];
    let sy = STENCILS[beta];
    let scale = fd_step.powi((alpha + beta) as i32);
    let mut worst = 0.0f64;
    for &(xi, eta) in points {
        let mut d = Complex64::default();
        for &(ox, cx) in sx {
            for &(oy, cy) in sy {
                let s = eval_m_family(
                    profile,
                    family,
                    xi + ox as f64 * fd_step,
                    eta + oy as f64 * fd_step,
                    j_range.clone(),
                    tol,
                )?;
                d += s.value * (cx * cy);
            }
        }
        let deriv = d.norm() / scale;
        let weight = (xi.abs() + eta.abs().sqrt()).powi((alpha + 2 * beta) as i32);
        worst = worst.max(deriv * weight);
    }
    Ok(worst)
}
