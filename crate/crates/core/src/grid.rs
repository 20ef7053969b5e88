//! Discretized function core: periodic grids, spectral transforms, norms,
//! and reproducible random band-limited test fields.
//!
//! Conventions used throughout the library:
//!
//! * sample points are cell midpoints `x_i = -Lx/2 + i*Lx/nx`, so the torus
//!   is the centered box `[-Lx/2, Lx/2) x [-Ly/2, Ly/2)`;
//! * spectral coefficients `c[p,q]` satisfy
//!   `f(x,y) = sum c[p,q] e^{2 pi i (p x / Lx + q y / Ly)}` with signed integer
//!   modes `p, q`, stored in FFT index order;
//! * all integrals are midpoint Riemann sums, so `lp_norm` is continuum
//!   calibrated (cell-area weighted) and discrete Plancherel reads
//!   `lp_norm(f,2)^2 = Lx*Ly*sum |c|^2`.

use crate::error::{LabError, Result};
use crate::fft;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

fn check_axis(n: usize, l: f64, axis: &str) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(LabError::InvalidGrid(format!(
            "n{axis} = {n} is not a power of two >= 8"
        )));
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(LabError::InvalidGrid(format!("L{axis} = {l} is not positive")));
    }
    Ok(())
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_axis(nx, lx, "x")?;
        check_axis(ny, ly, "y")?;
        Ok(Grid2D { nx, ny, lx, ly })
    }

    /// Square grid with unit period, the workhorse for multiplier sweeps.
    pub fn square(n: usize, l: f64) -> Result<Self> {
        Grid2D::new(n, n, l, l)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.lx * self.ly / (self.nx * self.ny) as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        -0.5 * self.lx + ix as f64 * self.lx / self.nx as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        -0.5 * self.ly + iy as f64 * self.ly / self.ny as f64
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Signed integer mode for FFT bin `i` (Nyquist bin maps to `-n/2`).
    pub fn signed_mode(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn mode_x(&self, ix: usize) -> i64 {
        Self::signed_mode(ix, self.nx)
    }

    pub fn mode_y(&self, iy: usize) -> i64 {
        Self::signed_mode(iy, self.ny)
    }

    /// Physical frequency of bin `ix` along the first axis (cycles per unit).
    pub fn freq_x(&self, ix: usize) -> f64 {
        self.mode_x(ix) as f64 / self.lx
    }

    pub fn freq_y(&self, iy: usize) -> f64 {
        self.mode_y(iy) as f64 / self.ly
    }

    /// Largest representable frequency magnitude along x (exclusive bound).
    pub fn nyquist_x(&self) -> f64 {
        (self.nx / 2) as f64 / self.lx
    }

    pub fn nyquist_y(&self) -> f64 {
        (self.ny / 2) as f64 / self.ly
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    One,
    Two,
    Both,
}

/// A single coordinate axis, for operators that act along one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis12 {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportKind {
    Annulus,
    Ball,
}

/// Frequency support descriptor for random test fields: `Annulus` keeps
/// coefficients with `|freq| in [scale/2, 2*scale]` on the chosen axis
/// (the max of both for `Axis::Both`), `Ball` keeps `|freq| <= 2*scale`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FreqSupportSpec {
    pub axis: Axis,
    pub kind: SupportKind,
    pub scale: f64,
}

impl FreqSupportSpec {
    pub fn annulus(axis: Axis, scale: f64) -> Self {
        FreqSupportSpec { axis, kind: SupportKind::Annulus, scale }
    }

    pub fn ball(axis: Axis, scale: f64) -> Self {
        FreqSupportSpec { axis, kind: SupportKind::Ball, scale }
    }

    pub fn admits(&self, f1: f64, f2: f64) -> bool {
        let v = match self.axis {
            Axis::One => f1.abs(),
            Axis::Two => f2.abs(),
            Axis::Both => f1.abs().max(f2.abs()),
        };
        match self.kind {
            SupportKind::Annulus => v >= 0.5 * self.scale && v <= 2.0 * self.scale,
            SupportKind::Ball => v <= 2.0 * self.scale,
        }
    }
}

/// Complex samples of a function on a periodic 2-D grid, with an optional
/// cached spectral representation.
#[derive(Debug, Clone)]
pub struct Field2D {
    pub grid: Grid2D,
    pub samples: Vec<Complex64>,
    pub spectral: Option<Vec<Complex64>>,
}

impl Field2D {
    pub fn from_samples(grid: Grid2D, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(LabError::InvalidArgument(format!(
                "sample count {} does not match grid {}x{}",
                samples.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Field2D { grid, samples, spectral: None })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Field2D { grid, samples: vec![Complex64::default(); grid.len()], spectral: None }
    }

    pub fn constant(grid: Grid2D, c: Complex64) -> Self {
        Field2D { grid, samples: vec![c; grid.len()], spectral: None }
    }

    /// Build a field from spectral coefficients (FFT index order); samples
    /// are materialized immediately and the coefficients are cached.
    pub fn from_spectral(grid: Grid2D, spectral: Vec<Complex64>) -> Result<Self> {
        if spectral.len() != grid.len() {
            return Err(LabError::InvalidArgument(format!(
                "coefficient count {} does not match grid {}x{}",
                spectral.len(),
                grid.nx,
                grid.ny
            )));
        }
        let samples = synthesize(&grid, &spectral);
        Ok(Field2D { grid, samples, spectral: Some(spectral) })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut samples = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let y = grid.y(iy);
            for ix in 0..grid.nx {
                samples.push(f(grid.x(ix), y));
            }
        }
        Field2D { grid, samples, spectral: None }
    }

    /// Forward transform: returns the same field with the spectral cache
    /// populated.
    pub fn forward(&self) -> Field2D {
        if self.spectral.is_some() {
            return self.clone();
        }
        let spectral = analyze(&self.grid, &self.samples);
        Field2D { grid: self.grid, samples: self.samples.clone(), spectral: Some(spectral) }
    }

    /// Inverse transform: re-synthesizes samples from the (possibly freshly
    /// computed) spectral coefficients.
    pub fn inverse(&self) -> Field2D {
        let with_spec = self.forward();
        let spectral = with_spec.spectral.unwrap();
        let samples = synthesize(&self.grid, &spectral);
        Field2D { grid: self.grid, samples, spectral: Some(spectral) }
    }

    /// Spectral coefficients, computed on demand if not cached.
    pub fn spectrum(&self) -> Cow<'_, [Complex64]> {
        match &self.spectral {
            Some(s) => Cow::Borrowed(s),
            None => Cow::Owned(analyze(&self.grid, &self.samples)),
        }
    }

    /// `L^p` norm over the whole torus, midpoint quadrature. `p = inf` is the
    /// sample sup.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_of(self.samples.iter().map(|z| z.norm()), self.grid.cell_area(), p)
    }

    /// `L^p` norm restricted to a closed box; cells whose midpoint lies in
    /// the box contribute.
    pub fn lp_norm_on(&self, p: f64, region: &Rect) -> Result<f64> {
        let g = &self.grid;
        let mut vals = Vec::new();
        for iy in 0..g.ny {
            let y = g.y(iy);
            if y < region.y0 || y > region.y1 {
                continue;
            }
            for ix in 0..g.nx {
                let x = g.x(ix);
                if x < region.x0 || x > region.x1 {
                    continue;
                }
                vals.push(self.samples[g.index(ix, iy)].norm());
            }
        }
        lp_of(vals.into_iter(), g.cell_area(), p)
    }

    /// Anisotropic Sobolev norm with spectral weights
    /// `(1+f1^2)^{a/2} (1+f2^2)^{b/2}` inside the squared sum.
    pub fn sobolev_norm(&self, a: f64, b: f64) -> f64 {
        let g = &self.grid;
        let spec = self.spectrum();
        let mut sum = 0.0;
        for iy in 0..g.ny {
            let f2 = g.freq_y(iy);
            let wy = (1.0 + f2 * f2).powf(0.5 * b);
            for ix in 0..g.nx {
                let f1 = g.freq_x(ix);
                let wx = (1.0 + f1 * f1).powf(0.5 * a);
                sum += spec[g.index(ix, iy)].norm_sqr() * wx * wy;
            }
        }
        (g.lx * g.ly * sum).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Field2D {
        Field2D {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * c).collect(),
            spectral: self.spectral.as_ref().map(|s| s.iter().map(|z| z * c).collect()),
        }
    }

    pub fn add(&self, other: &Field2D) -> Field2D {
        assert_eq!(self.grid, other.grid);
        Field2D {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            spectral: match (&self.spectral, &other.spectral) {
                (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(a, b)| a + b).collect()),
                _ => None,
            },
        }
    }

    pub fn sub(&self, other: &Field2D) -> Field2D {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise product (spatial side).
    pub fn mul_pointwise(&self, other: &Field2D) -> Field2D {
        assert_eq!(self.grid, other.grid);
        Field2D {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect(),
            spectral: None,
        }
    }

    /// Modulation by integer modes: multiply by `e^{2 pi i (p x/Lx + q y/Ly)}`.
    /// Exact on the grid (cyclic spectral shift).
    pub fn modulate(&self, p: i64, q: i64) -> Field2D {
        let g = &self.grid;
        let mut samples = Vec::with_capacity(g.len());
        for iy in 0..g.ny {
            let phy = 2.0 * std::f64::consts::PI * q as f64 * g.y(iy) / g.ly;
            for ix in 0..g.nx {
                let ph = 2.0 * std::f64::consts::PI * p as f64 * g.x(ix) / g.lx + phy;
                samples.push(self.samples[g.index(ix, iy)] * Complex64::from_polar(1.0, ph));
            }
        }
        Field2D { grid: self.grid, samples, spectral: None }
    }

    /// Cyclic translation by whole grid cells (exact on the torus).
    pub fn translate_cells(&self, sx: i64, sy: i64) -> Field2D {
        let g = &self.grid;
        let mut samples = vec![Complex64::default(); g.len()];
        let (nx, ny) = (g.nx as i64, g.ny as i64);
        for iy in 0..g.ny {
            let src_y = ((iy as i64 - sy).rem_euclid(ny)) as usize;
            for ix in 0..g.nx {
                let src_x = ((ix as i64 - sx).rem_euclid(nx)) as usize;
                samples[g.index(ix, iy)] = self.samples[g.index(src_x, src_y)];
            }
        }
        Field2D { grid: self.grid, samples, spectral: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn centered_unit() -> Self {
        Rect { x0: -0.5, x1: 0.5, y0: -0.5, y1: 0.5 }
    }
}

fn lp_of(vals: impl Iterator<Item = f64>, cell: f64, p: f64) -> Result<f64> {
    if p < 1.0 || p.is_nan() {
        return Err(LabError::InvalidArgument(format!("lp_norm requires p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(vals.fold(0.0, f64::max));
    }
    if (p - 2.0).abs() < 1e-14 {
        let s: f64 = vals.map(|v| v * v).sum();
        return Ok((cell * s).sqrt());
    }
    let s: f64 = vals.map(|v| v.powf(p)).sum();
    Ok((cell * s).powf(1.0 / p))
}

/// Forward analysis: samples -> coefficients with the centered-torus phase
/// convention folded in.
pub(crate) fn analyze(grid: &Grid2D, samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    fft::forward_2d(&mut buf, grid.nx, grid.ny);
    let norm = 1.0 / grid.len() as f64;
    apply_parity(grid, &mut buf, norm);
    buf
}

/// Inverse synthesis: coefficients -> samples.
pub(crate) fn synthesize(grid: &Grid2D, spectral: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spectral.to_vec();
    apply_parity(grid, &mut buf, 1.0);
    fft::inverse_2d(&mut buf, grid.nx, grid.ny);
    buf
}

// x_i starts at -L/2, which shows up as a (-1)^{p+q} twist on coefficients.
fn apply_parity(grid: &Grid2D, buf: &mut [Complex64], norm: f64) {
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let sign = if (ix + iy) % 2 == 0 { norm } else { -norm };
            buf[iy * grid.nx + ix] *= sign;
        }
    }
}

/// Unit-norm random field with i.i.d. complex Gaussian coefficients on the
/// admissible frequency set and exact zeros elsewhere. Pure function of
/// `(grid, spec, seed)`.
pub fn random_band_limited(grid: Grid2D, spec: &FreqSupportSpec, seed: u64) -> Result<Field2D> {
    let coeffs = random_band_limited_spectrum(&grid, spec, seed)?;
    Field2D::from_spectral(grid, coeffs)
}

/// Spectral-side variant of [`random_band_limited`]; same coefficient stream,
/// no synthesis. Used by the sweep drivers that only need Plancherel data.
pub fn random_band_limited_spectrum(
    grid: &Grid2D,
    spec: &FreqSupportSpec,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let nyq = match spec.axis {
        Axis::One => grid.nyquist_x(),
        Axis::Two => grid.nyquist_y(),
        Axis::Both => grid.nyquist_x().min(grid.nyquist_y()),
    };
    // the scale itself must be representable; the admissible set clips at
    // the Nyquist bins either way
    if spec.scale >= nyq {
        return Err(LabError::NyquistExceeded { frequency: spec.scale, nyquist: nyq });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    let mut count = 0usize;
    for iy in 0..grid.ny {
        let f2 = grid.freq_y(iy);
        if grid.mode_y(iy).unsigned_abs() as usize >= grid.ny / 2 {
            continue;
        }
        for ix in 0..grid.nx {
            if grid.mode_x(ix).unsigned_abs() as usize >= grid.nx / 2 {
                continue;
            }
            let f1 = grid.freq_x(ix);
            if spec.admits(f1, f2) {
                coeffs[grid.index(ix, iy)] = gaussian(&mut rng);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(LabError::EmptySet(format!(
            "no grid frequencies admissible at scale {}",
            spec.scale
        )));
    }
    let energy: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let norm = (grid.lx * grid.ly * energy).sqrt();
    for c in &mut coeffs {
        *c /= norm;
    }
    Ok(coeffs)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    // Box-Muller on (0,1] uniforms.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * th.cos(), r * th.sin())
}

/// Per-trial RNG stream: a SplitMix64 hop keeps trial seeds decorrelated.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    let mut z = base.wrapping_add((trial as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// 1-D companion to [`Field2D`] used by the frequency-pruning routines.
#[derive(Debug, Clone)]
pub struct Field1D {
    pub n: usize,
    pub period: f64,
    pub samples: Vec<Complex64>,
}

impl Field1D {
    pub fn from_samples(n: usize, period: f64, samples: Vec<Complex64>) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!("n = {n} is not a power of two >= 8")));
        }
        if samples.len() != n {
            return Err(LabError::InvalidArgument("sample count mismatch".into()));
        }
        if !(period > 0.0) {
            return Err(LabError::InvalidGrid(format!("period = {period} is not positive")));
        }
        Ok(Field1D { n, period, samples })
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.period + i as f64 * self.period / self.n as f64
    }

    pub fn freq(&self, i: usize) -> f64 {
        Grid2D::signed_mode(i, self.n) as f64 / self.period
    }

    pub fn cell(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.samples.clone();
        fft::forward(&mut buf);
        let norm = 1.0 / self.n as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= if i % 2 == 0 { norm } else { -norm };
        }
        buf
    }

    pub fn from_spectrum(n: usize, period: f64, spec: &[Complex64]) -> Result<Self> {
        let mut buf = spec.to_vec();
        for (i, c) in buf.iter_mut().enumerate() {
            if i % 2 == 1 {
                *c = -*c;
            }
        }
        fft::inverse(&mut buf);
        Field1D::from_samples(n, period, buf)
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.samples.iter().map(|z| z.norm_sqr()).sum();
        (self.cell() * s).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}
