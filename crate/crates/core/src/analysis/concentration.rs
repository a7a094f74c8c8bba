use super::FreeBoundaryReport;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::reaction::ReactionProfile;

/// Nodal `B_eps(u)`.
pub fn chi_field(u: &ScalarField, eps: f64, reaction: &ReactionProfile) -> Result<ScalarField> {
    reaction.big_b_eps(0.0, eps)?;
    Ok(u.map(|s| reaction.big_b_eps_unchecked(s, eps)))
}

/// Fraction of nodes where `chi` lies strictly between `0.05 M` and `0.95 M`.
pub fn chi_transition_fraction(chi: &ScalarField, mass: f64) -> f64 {
    let (lo, hi) = (0.05 * mass, 0.95 * mass);
    let v = chi.values();
    v.iter().filter(|&&c| c > lo && c < hi).count() as f64 / v.len() as f64
}

/// Integral of `beta_eps(u)` over the nodes within `width` of a free-boundary
/// point, divided by the free-boundary measure (point count in 1D, polyline
/// length in 2D). `None` when there is no free boundary.
pub fn reaction_concentration(
    u: &ScalarField,
    eps: f64,
    reaction: &ReactionProfile,
    fb: &FreeBoundaryReport,
    width: f64,
) -> Result<Option<f64>> {
    reaction.beta_eps(0.0, eps)?;
    if !(width > 0.0) {
        return Err(Error::OutOfRange {
            name: "width",
            reason: format!("must be positive, got {width}"),
        });
    }
    if fb.is_empty() {
        return Ok(None);
    }
    let grid = u.grid();
    let d = grid.dim();
    let mut in_strip = vec![false; grid.num_nodes()];
    for pt in &fb.points {
        let x = &pt.position[..d];
        if grid.distance_to_boundary(x) < width {
            return Err(Error::Precondition(format!(
                "strip of half-width {width} around {x:?} leaves the domain"
            )));
        }
        for n in grid.nodes_in_ball(x, width) {
            in_strip[n] = true;
        }
    }
    let total: f64 = in_strip
        .iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(n, _)| grid.node_weight(n) * reaction.beta_eps_unchecked(u.values()[n], eps))
        .sum();
    let measure = fb.measure(d);
    if !(measure > 0.0) {
        return Ok(None);
    }
    Ok(Some(total / measure))
}
