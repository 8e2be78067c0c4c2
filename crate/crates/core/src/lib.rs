//! Solvers and verification diagnostics for curve shortening with a
//! misorientation-dependent mobility μσ(α(t)) coupled to the misorientation
//! relaxation law α' = -γσ'(α)|Γ|.
//!
//! * [`graph_solver`] evolves periodic graphs with a semi-implicit scheme.
//! * [`curve_solver`] tracks closed polygonal curves, optionally anisotropic.
//! * [`kernel`] provides the backward heat kernel with accumulated conductivity.
//! * [`diagnostics`] turns the dissipation identities, the weighted
//!   monotonicity formula and the a priori bounds into executable checks.

pub mod curve_solver;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod graph_solver;
pub mod kernel;
pub mod linalg;
pub mod sigma;

pub use error::{Error, Result};
pub use geometry::{GraphState, Grid1D};
pub use graph_solver::{Params, TimeStep, Trajectory};
pub use sigma::{AnisotropicSigma, SigmaModel};
