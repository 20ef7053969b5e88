//! Numerical laboratory for oscillatory integrals and bilinear operators
//! along a parabola: phase-regime multiplier estimates, Littlewood-Paley
//! decompositions, singular and maximal operators, empirical smoothing decay,
//! frequency pruning, sublevel-set refinement machinery, and a corner-pattern
//! finder.

pub mod error;
pub mod fft;
pub mod fit;
pub mod grid;
pub mod littlewood_paley;
pub mod multiplier;
pub mod operators;
pub mod quadrature;
pub mod smoothing;

pub use error::{LabError, Result};
