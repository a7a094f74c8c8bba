//! Numerical solver and diagnostics for the singularly perturbed
//! variable-exponent problem `div(|grad u|^(p(x)-2) grad u) = beta_eps(u) + f`
//! on one- and two-dimensional rectangles, together with checks of the
//! limiting free-boundary behaviour.

pub mod analysis;
pub mod barriers;
pub mod error;
pub mod exponent;
pub mod grid;
mod linalg;
pub mod oracle;
pub mod plot;
pub mod reaction;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use exponent::ExponentField;
pub use grid::{Grid, ScalarField, VectorField};
pub use reaction::{lambda_star, ReactionProfile};
pub use solver::{DirichletProblem, SolveResult, SolverConfig, Stage};
