//! Energies, convex relaxation, surface energies and constrained minimization
//! for the one-dimensional simple-shear problem of geometrically nonlinear
//! Cosserat elasticity.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command
//! line live in the `cosserat-shear-cli` companion crate.
//!
//! Module map:
//!
//! - [`model`]: material parameters, pointwise densities and the discretized
//!   functionals `E_eps`, `E_eps^theta` and the rescaled `F_eps`.
//! - [`closed_form`]: regime classification, wells, minimal energies, the
//!   condensed energy and the `eta` map.
//! - [`envelope`]: the convexified density `Q**`, a brute-force hull oracle
//!   and the relaxed functional.
//! - [`interface_energy`]: surface energies, the optimal transition profile
//!   and the first-order limit functional.
//! - [`solver`]: projected Newton / augmented Lagrangian minimization of the
//!   discrete functionals, recovery sequences and the `eps` sweep.
#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// banded and folded loops index several arrays with one counter
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod closed_form;
pub mod envelope;
mod error;
pub mod interface_energy;
pub mod model;
pub(crate) mod numeric;
pub mod solver;

pub use closed_form::{Regime, RegimeTag, WellSet};
pub use envelope::{BranchTag, EnvelopeBranch};
pub use error::{Error, Result};
pub use interface_energy::{F0Value, PiecewiseConstantRotation, TransitionProfile};
pub use model::{EnergyBreakdown, GridField, MaterialParams};
pub use solver::{SolveResult, SolverConfig, SweepRow};

/// Absolute tolerance on the discrete mean of the micro-rotation when the
/// volume constraint is checked.
pub const TOL_VC: f64 = 1e-8;

/// Distance to a well below which a transition profile is clamped.
pub const TOL_TAIL: f64 = 1e-8;

/// Distance below which a piecewise constant value counts as a well.
pub const TOL_WELL: f64 = 1e-8;
