//! Path-integral propagators for two coupled harmonic oscillators sharing a
//! single bath mode, built from the white-noise (Hida) representation of the
//! Feynman integral.
//!
//! The crate is organised around the closed forms and the numerical oracles
//! that check them:
//!
//! * [`model`] holds the physical parameters, the two decoupling rotations and
//!   the normal-mode frequencies.
//! * [`gaussian`] is the complex Gaussian algebra shared by every kernel.
//! * [`whitenoise`] discretizes the noise kernel, the Fredholm determinant,
//!   the T-transform and the Donsker-delta λ-integral.
//! * [`propagator`] contains the Mehler kernels, the full three-mode kernel and
//!   quadrature propagation of grid states.
//! * [`master`] builds the Liouville-space propagator and evolves reduced
//!   density matrices.
//! * [`tdse`] is an independent grid solver (split-operator and dense
//!   exponentiation) used to validate the kernels.
//!
//! Coupling sign convention: the closed forms are exact for the potential
//! `V = ½mω²(x₁² + x₂²) − λ x₁x₂ + ½mω_q² q² − C q (x₁ + x₂)`, see
//! [`model::potential`].

// Negated comparisons (`!(x > 0.0)`) are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod grid;
pub mod master;
pub mod model;
pub mod propagator;
pub mod tdse;
pub mod whitenoise;

mod par;
mod quadrature;

pub use error::{Error, Result};
pub use gaussian::{gaussian_integral, QuadraticKernel};
pub use grid::{GridSpec, GridState};
pub use model::{ModeFrequencies, RotationAngles, SystemParams};
