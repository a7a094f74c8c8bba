use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{ensure_same_grid, gradient, Grid, ScalarField};
use crate::reaction::ReactionProfile;

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs|`.
    pub gap: f64,
    /// The six integrals in order: the three left-hand terms, then the two
    /// exponent-gradient terms and the `B_eps` term.
    pub terms: [f64; 6],
}

/// Smooth bump `exp(1 - 1 / (1 - (|x - c| / w)^2))` supported in `B_w(c)`,
/// equal to 1 at the center.
pub fn bump_field(grid: Grid, center: &[f64], width: f64) -> Result<ScalarField> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::OutOfRange {
            name: "width",
            reason: format!("must be positive, got {width}"),
        });
    }
    if center.len() != grid.dim() {
        return Err(Error::OutsideDomain(center.to_vec()));
    }
    Ok(ScalarField::from_fn(grid, |x| {
        let r2: f64 = x
            .iter()
            .zip(center)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / (width * width);
        if r2 < 1.0 {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    }))
}

/// Evaluates both sides of the domain-variation identity in the `x1`
/// direction,
///
/// ```text
/// -∫ |∇u|^p/p ψ_x1 + ∫ |∇u|^(p-2) ∇u·∇ψ u_x1 + ∫ f u_x1 ψ
///     = ∫ |∇u|^p/p log|∇u| p_x1 ψ - ∫ |∇u|^p/p² p_x1 ψ + ∫ B_eps(u) ψ_x1,
/// ```
///
/// by the sample quadrature of the discretization. `psi` must vanish on the
/// two outermost layers of nodes.
pub fn identity_4_2_check(
    u: &ScalarField,
    eps: f64,
    p: &ExponentField,
    f: &ScalarField,
    reaction: &ReactionProfile,
    psi: &ScalarField,
) -> Result<IdentityCheck> {
    ensure_same_grid(u.grid(), p.grid())?;
    ensure_same_grid(u.grid(), f.grid())?;
    ensure_same_grid(u.grid(), psi.grid())?;
    reaction.big_b_eps(0.0, eps)?;
    let grid = *u.grid();
    let d = grid.dim();
    let margin = 1.5 * grid.h();
    for n in 0..grid.num_nodes() {
        if psi.values()[n] != 0.0 && grid.distance_to_boundary(&grid.node_coords(n)[..d]) < margin {
            return Err(Error::Precondition(
                "test field must vanish near the boundary".into(),
            ));
        }
    }
    let gu = gradient(u);
    let gpsi = gradient(psi);
    let p_nodal = ScalarField::new(grid, p.values().to_vec())?;
    let gp = gradient(&p_nodal);
    let ps = p.sample_values();
    let big_b = u.map(|s| reaction.big_b_eps_unchecked(s, eps));
    let w = grid.sample_weight();
    let mut t = [0.0; 6];
    for s in 0..grid.num_samples() {
        let [a, b] = grid.sample_edge(s);
        let psi_s = 0.5 * (psi.values()[a] + psi.values()[b]);
        let dpsi = gpsi.get(s);
        if psi_s == 0.0 && dpsi.iter().all(|&v| v == 0.0) {
            continue;
        }
        let g = gu.get(s);
        let pv = ps[s];
        let norm = gu.norm_at(s);
        let (np, np2, logn) = if norm > 0.0 {
            (norm.powf(pv), norm.powf(pv - 2.0), norm.ln())
        } else {
            (0.0, 0.0, 0.0)
        };
        let ux = g[0];
        let px = gp.get(s)[0];
        let f_s = 0.5 * (f.values()[a] + f.values()[b]);
        let b_s = 0.5 * (big_b.values()[a] + big_b.values()[b]);
        let gdot: f64 = (0..d).map(|k| g[k] * dpsi[k]).sum();
        t[0] -= w * np / pv * dpsi[0];
        t[1] += w * np2 * gdot * ux;
        t[2] += w * f_s * ux * psi_s;
        t[3] += w * np / pv * logn * px * psi_s;
        t[4] -= w * np / (pv * pv) * px * psi_s;
        t[5] += w * b_s * dpsi[0];
    }
    let lhs = t[0] + t[1] + t[2];
    let rhs = t[3] + t[4] + t[5];
    Ok(IdentityCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        terms: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> ReactionProfile {
        ReactionProfile::quadratic(0.5).unwrap()
    }

    #[test]
    fn zero_test_field() {
        let grid = Grid::new_2d([21, 21], [0.0, 0.0], [1.0, 1.0]).unwrap();
        let p = ExponentField::from_fn(grid, |x| 2.0 + x[0]).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0] * x[1]);
        let z = ScalarField::zeros(grid);
        let c = identity_4_2_check(&u, 0.1, &p, &z, &quad(), &z).unwrap();
        assert_eq!((c.lhs, c.rhs, c.gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_exponent_drops_gradient_terms() {
        let grid = Grid::new_2d([41, 41], [0.0, 0.0], [1.0, 1.0]).unwrap();
        let p = ExponentField::constant(grid, 3.0).unwrap();
        let u = ScalarField::from_fn(grid, |x| x[0] * x[0] + x[1]);
        let psi = bump_field(grid, &[0.5, 0.5], 0.3).unwrap();
        let z = ScalarField::zeros(grid);
        let c = identity_4_2_check(&u, 0.1, &p, &z, &quad(), &psi).unwrap();
        assert_eq!(c.terms[3], 0.0);
        assert_eq!(c.terms[4], 0.0);
    }

    #[test]
    fn support_near_boundary_is_rejected() {
        let grid = Grid::new_1d(101, 0.0, 1.0).unwrap();
        let p = ExponentField::constant(grid, 2.0).unwrap();
        let u = ScalarField::zeros(grid);
        let psi = bump_field(grid, &[0.1], 0.2).unwrap();
        assert!(identity_4_2_check(&u, 0.1, &p, &u, &quad(), &psi).is_err());
    }

    #[test]
    fn smooth_solution_converges() {
        // u'' = 2 with u >= 1 > eps, so B_eps(u) = M is constant.
        let mut gaps = Vec::new();
        for n in [201, 401] {
            let grid = Grid::new_1d(n, -1.0, 1.0).unwrap();
            let p = ExponentField::constant(grid, 2.0).unwrap();
            let u = ScalarField::from_fn(grid, |x| 1.0 + x[0] * x[0]);
            let f = ScalarField::constant(grid, 2.0);
            let psi = bump_field(grid, &[0.1], 0.5).unwrap();
            let c = identity_4_2_check(&u, 0.01, &p, &f, &quad(), &psi).unwrap();
            assert!(c.terms[0].abs() > 1e-2);
            gaps.push(c.gap);
        }
        // the quadrature is exact for quadratics
        assert!(gaps.iter().all(|&g| g < 1e-12), "{gaps:?}");
    }

    #[test]
    fn variable_exponent_terms() {
        // u = 1 + 2x with p = 2 + x solves (|u'|^(p-2) u')' = 2^(1+x) ln 2.
        let mut gaps = Vec::new();
        for n in [201, 401] {
            let grid = Grid::new_1d(n, 0.0, 1.0).unwrap();
            let p = ExponentField::from_fn(grid, |x| 2.0 + x[0]).unwrap();
            let u = ScalarField::from_fn(grid, |x| 1.0 + 2.0 * x[0]);
            let f = ScalarField::from_fn(grid, |x| 2f64.powf(1.0 + x[0]) * 2f64.ln());
            let psi = bump_field(grid, &[0.5], 0.3).unwrap();
            let c = identity_4_2_check(&u, 0.01, &p, &f, &quad(), &psi).unwrap();
            assert!(c.terms[3].abs() > 1e-3 && c.terms[4].abs() > 1e-3);
            gaps.push(c.gap);
        }
        assert!(gaps[1] < 0.5 * gaps[0] || gaps[1] < 1e-10, "{gaps:?}");
    }
}
