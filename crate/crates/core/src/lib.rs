//! Time-harmonic scattering from a local perturbation of an open periodic
//! waveguide in the upper half plane.
//!
//! The field is written as an integral over quasi-momenta on a deformed path
//! `Γ` from `-1/2` to `1/2`. Every node of `Γ` carries a quasi-periodic cell
//! problem, discretized with Fourier modes in `x₁` and second-order finite
//! differences in `x₂`, and truncated at the top either with the exact
//! Rayleigh (DtN) condition or with a perfectly matched layer.
//!
//! Module map:
//! - [`symbols`]: branch-cut square root, PML profile, DtN / PML-DtN symbols.
//! - [`modes`]: guided modes of the constant-index slab.
//! - [`contour`]: the indented path `Γ` and its trapezoidal rule.
//! - [`cellsolver`]: cell-problem assembly, block-tridiagonal solves and the
//!   fixpoint (Born series) iteration.
//! - [`synthesis`]: inverse Floquet-Bloch synthesis, error metrics, mode
//!   extraction and the PML convergence sweep.
//! - [`experiment`]: wiring of the slab scattering example from physical
//!   parameters.

pub mod cellsolver;
pub mod contour;
mod error;
pub mod experiment;
pub mod linalg;
pub mod modes;
pub mod quadrature;
pub mod symbols;
pub mod synthesis;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// The imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
