//! Variational space-time solver for semilinear wave trajectories.
//!
//! The crate minimizes an exponentially weighted, fourth-order-in-time
//! functional over discrete trajectories with pinned initial position and
//! velocity, solves the equivalent discrete Euler-Lagrange two-point problem
//! as an independent cross-check, and provides reference integrators plus
//! diagnostics for the vanishing-regularization limit in which minimizers
//! approach solutions of
//!
//! ```text
//! u_tt - Δu + W'(u) = 0,      W(r) = |r|^p / 2.
//! ```
//!
//! Modules follow the pipeline:
//!
//! * [`temporal`] — uniform time grids, exponential weights, backward
//!   difference operators, interpolants, backward mean operator.
//! * [`spatial`] — scalar and 1-D Dirichlet spatial models, the energy `phi`,
//!   its gradient and Hessian action, nonlinearity families.
//! * [`functional`] — the weighted discrete objective over free trajectory
//!   variables, with gradient and matrix-free Hessian action.
//! * [`solver`] — damped Newton minimization (conjugate-gradient inner
//!   solves), an independent Newton solve of the Euler-Lagrange system, and
//!   reference integrators for the limit equation.
//! * [`diagnostics`] — energy estimates, residuals, trajectory distances,
//!   recovery sequences, and the vanishing-`eps` convergence study.

pub mod diagnostics;
mod error;
pub mod functional;
pub(crate) mod linalg;
pub mod solver;
pub mod spatial;
pub mod temporal;

pub use error::{Error, Result};
