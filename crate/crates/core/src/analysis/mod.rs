//! Diagnostics of computed solutions: free-boundary extraction and slopes,
//! gradient bounds, Harnack quotients, nondegeneracy, the `B_eps(u)` field,
//! reaction concentration and the domain-variation identity.

mod concentration;
mod free_boundary;
mod harnack;
mod identity;
mod lipschitz;
mod nondegeneracy;

pub use concentration::{chi_field, chi_transition_fraction, reaction_concentration};
pub use free_boundary::{
    extract_free_boundary, slope_report, FreeBoundaryPoint, FreeBoundaryReport,
};
pub use harnack::{harnack_quotient, sample_admissible_balls, HarnackSample};
pub use identity::{bump_field, identity_4_2_check, IdentityCheck};
pub use lipschitz::{lipschitz_monitor, max_gradient_interior, upper_gradient_ratio};
pub use nondegeneracy::{nondegeneracy_report, NondegeneracyEntry, NondegeneracyReport};

use crate::error::Result;
use crate::grid::{interpolate_values, nodal_gradient, Grid, ScalarField};

/// Bilinear interpolation of the central-difference nodal gradient.
pub(crate) struct GradientInterp {
    grid: Grid,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl GradientInterp {
    pub(crate) fn new(u: &ScalarField) -> Self {
        let g = nodal_gradient(u);
        GradientInterp {
            grid: *u.grid(),
            gx: g.iter().map(|v| v[0]).collect(),
            gy: g.iter().map(|v| v[1]).collect(),
        }
    }

    pub(crate) fn at(&self, point: &[f64]) -> Result<[f64; 2]> {
        let x = interpolate_values(&self.grid, &self.gx, point)?;
        let y = if self.grid.dim() == 2 {
            interpolate_values(&self.grid, &self.gy, point)?
        } else {
            0.0
        };
        Ok([x, y])
    }
}

pub(crate) fn norm2(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}
