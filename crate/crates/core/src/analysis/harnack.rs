use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{ensure_same_grid, interpolate, ScalarField};

const RING_POINTS: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct HarnackSample {
    pub center: [f64; 2],
    pub radius: f64,
    pub sup: f64,
    pub inf: f64,
    pub mu: f64,
    /// `sup / (inf + R + R mu)`.
    pub quotient: f64,
}

fn ball_nodes(u: &ScalarField, center: &[f64], radius: f64) -> Vec<usize> {
    u.grid().nodes_in_ball(center, radius)
}

/// Harnack quotient over `B_R(center)` with
/// `mu = (R ||f||_inf(B_4R))^(1 / (inf_{B_4R} p - 1))`. Requires `B_4R`
/// inside the domain, `R <= 1` and `u > 0` at every node of `B_4R`.
pub fn harnack_quotient(
    u: &ScalarField,
    f: &ScalarField,
    p: &ExponentField,
    center: &[f64],
    radius: f64,
) -> Result<HarnackSample> {
    ensure_same_grid(u.grid(), f.grid())?;
    ensure_same_grid(u.grid(), p.grid())?;
    let grid = u.grid();
    let d = grid.dim();
    if center.len() != d {
        return Err(Error::OutsideDomain(center.to_vec()));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::OutOfRange {
            name: "radius",
            reason: format!("must lie in (0, 1], got {radius}"),
        });
    }
    if grid.distance_to_boundary(center) < 4.0 * radius {
        return Err(Error::Precondition(
            "the ball of radius 4R must lie inside the domain".into(),
        ));
    }
    let big = ball_nodes(u, center, 4.0 * radius);
    if big.iter().any(|&n| u.values()[n] <= 0.0) {
        return Err(Error::Precondition(
            "u must be positive on the ball of radius 4R".into(),
        ));
    }
    let f_sup = big.iter().map(|&n| f.values()[n].abs()).fold(0.0, f64::max);
    let (p_low, _) = p.local_range(center, 4.0 * radius)?;
    let mu = (radius * f_sup).powf(1.0 / (p_low - 1.0));

    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for n in ball_nodes(u, center, radius) {
        sup = sup.max(u.values()[n]);
        inf = inf.min(u.values()[n]);
    }
    let ring: Vec<[f64; 2]> = if d == 1 {
        vec![[center[0] - radius, 0.0], [center[0] + radius, 0.0]]
    } else {
        (0..RING_POINTS)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / RING_POINTS as f64;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            })
            .collect()
    };
    for x in ring {
        let v = interpolate(u, &x[..d])?;
        sup = sup.max(v);
        inf = inf.min(v);
    }
    let mut c = [0.0; 2];
    c[..d].copy_from_slice(center);
    Ok(HarnackSample {
        center: c,
        radius,
        sup,
        inf,
        mu,
        quotient: sup / (inf + radius + radius * mu),
    })
}

/// Draws `count` balls `(center, R)` with `R` uniform in `radii` and centers
/// uniform in the domain, keeping those whose `B_4R` lies inside the domain
/// with `u > level` at every node. Deterministic for a fixed `seed`.
pub fn sample_admissible_balls(
    u: &ScalarField,
    count: usize,
    radii: (f64, f64),
    level: f64,
    seed: u64,
) -> Result<Vec<([f64; 2], f64)>> {
    let grid = u.grid();
    let d = grid.dim();
    if !(radii.0 > 0.0 && radii.1 >= radii.0) {
        return Err(Error::OutOfRange {
            name: "radii",
            reason: format!("invalid range {radii:?}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_tries = 1000 * count.max(1);
    for _ in 0..max_tries {
        if out.len() == count {
            break;
        }
        let r = if radii.1 > radii.0 {
            rng.random_range(radii.0..radii.1)
        } else {
            radii.0
        };
        let mut c = [0.0; 2];
        for (a, ca) in c.iter_mut().enumerate().take(d) {
            *ca = rng.random_range(grid.lower(a)..grid.upper(a));
        }
        if grid.distance_to_boundary(&c[..d]) < 4.0 * r {
            continue;
        }
        if ball_nodes(u, &c[..d], 4.0 * r)
            .iter()
            .all(|&n| u.values()[n] > level)
        {
            out.push((c, r));
        }
    }
    if out.len() < count {
        return Err(Error::Precondition(format!(
            "found only {} admissible balls out of {count}",
            out.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn constant_and_affine() {
        let grid = Grid::new_2d([61, 61], [-1.5, -1.5], [1.5, 1.5]).unwrap();
        let p = ExponentField::constant(grid, 2.0).unwrap();
        let zero = ScalarField::zeros(grid);
        let c = ScalarField::constant(grid, 3.0);
        let s = harnack_quotient(&c, &zero, &p, &[0.0, 0.0], 0.25).unwrap();
        assert!((s.quotient - 3.0 / 3.25).abs() < 1e-14);
        let u = ScalarField::from_fn(grid, |x| x[0] + 2.0);
        let s = harnack_quotient(&u, &zero, &p, &[0.0, 0.0], 0.25).unwrap();
        assert!((s.quotient - 1.125).abs() < 1e-12, "{}", s.quotient);
        assert_eq!(s.mu, 0.0);
        assert!(harnack_quotient(&u, &zero, &p, &[1.0, 0.0], 0.25).is_err());
        assert!(harnack_quotient(&zero, &zero, &p, &[0.0, 0.0], 0.25).is_err());
    }

    #[test]
    fn forcing_enters_mu() {
        let grid = Grid::new_1d(401, -2.0, 2.0).unwrap();
        let p = ExponentField::constant(grid, 3.0).unwrap();
        let u = ScalarField::constant(grid, 1.0);
        let f = ScalarField::constant(grid, -8.0);
        let s = harnack_quotient(&u, &f, &p, &[0.0], 0.5).unwrap();
        assert!((s.mu - 2.0).abs() < 1e-12);
        assert!((s.quotient - 1.0 / 2.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_with_zero_forcing() {
        let grid = Grid::new_2d([41, 41], [0.0, 0.0], [1.0, 1.0]).unwrap();
        let p = ExponentField::constant(grid, 2.0).unwrap();
        let zero = ScalarField::zeros(grid);
        let u = ScalarField::from_fn(grid, |x| 1.0 + x[0] * x[1]);
        let q = harnack_quotient(&u, &zero, &p, &[0.5, 0.5], 0.1)
            .unwrap()
            .quotient;
        for t in [1.0, 2.0, 7.5] {
            let qt = harnack_quotient(&u.scaled(t), &zero, &p, &[0.5, 0.5], 0.1)
                .unwrap()
                .quotient;
            assert!(qt <= t * q + 1e-12);
        }
    }

    #[test]
    fn ball_sampling_is_deterministic() {
        let grid = Grid::new_2d([41, 41], [0.0, 0.0], [1.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(grid, |x| 1.0 + x[0]);
        let a = sample_admissible_balls(&u, 10, (0.02, 0.05), 0.5, 7).unwrap();
        let b = sample_admissible_balls(&u, 10, (0.02, 0.05), 0.5, 7).unwrap();
        assert_eq!(a, b);
        for (c, r) in &a {
            assert!(grid.distance_to_boundary(c) >= 4.0 * r);
        }
    }
}
