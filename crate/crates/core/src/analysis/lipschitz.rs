use super::FreeBoundaryReport;
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{ensure_same_grid, gradient, ScalarField};
use crate::reaction::lambda_star;
use crate::solver::SolveResult;

/// Largest sample gradient among samples at distance `>= margin` from the
/// boundary.
pub fn max_gradient_interior(u: &ScalarField, margin: f64) -> Result<f64> {
    let grid = u.grid();
    let d = grid.dim();
    let g = gradient(u);
    let mut best: Option<f64> = None;
    for s in 0..grid.num_samples() {
        if grid.distance_to_boundary(&grid.sample_position(s)[..d]) >= margin {
            let n = g.norm_at(s);
            best = Some(best.map_or(n, |b| b.max(n)));
        }
    }
    best.ok_or_else(|| Error::OutOfRange {
        name: "margin",
        reason: format!("no gradient samples lie {margin} away from the boundary"),
    })
}

/// Per-stage maximum of `|grad u|` over the shrunk domain.
pub fn lipschitz_monitor(sweep: &[SolveResult], margin: f64) -> Result<Vec<f64>> {
    if !(margin > 0.0) {
        return Err(Error::OutOfRange {
            name: "margin",
            reason: format!("must be positive, got {margin}"),
        });
    }
    sweep
        .iter()
        .map(|r| max_gradient_interior(&r.u, margin))
        .collect()
}

/// Largest `|grad u| / lambda_star(x0)` over gradient samples within `radius`
/// of a free-boundary point `x0` whose edge lies in `{u > threshold}`.
pub fn upper_gradient_ratio(
    u: &ScalarField,
    p: &ExponentField,
    mass: f64,
    fb: &FreeBoundaryReport,
    radius: f64,
) -> Result<Option<f64>> {
    ensure_same_grid(u.grid(), p.grid())?;
    let grid = u.grid();
    let d = grid.dim();
    let g = gradient(u);
    let v = u.values();
    let mut best: Option<f64> = None;
    for pt in &fb.points {
        let lam = lambda_star(p.at(&pt.position[..d])?, mass)?;
        let near = grid.nodes_in_ball(&pt.position[..d], radius + grid.h());
        for n in near {
            // samples on edges leaving this node towards larger indices
            for s in samples_at_node(grid, n) {
                let [a, b] = grid.sample_edge(s);
                if v[a] <= fb.threshold || v[b] <= fb.threshold {
                    continue;
                }
                let x = grid.sample_position(s);
                let dist: f64 = (0..d)
                    .map(|k| (x[k] - pt.position[k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if dist <= radius {
                    let r = g.norm_at(s) / lam;
                    best = Some(best.map_or(r, |b: f64| b.max(r)));
                }
            }
        }
    }
    Ok(best)
}

fn samples_at_node(grid: &crate::grid::Grid, n: usize) -> Vec<usize> {
    let m = grid.node_multi(n);
    if grid.dim() == 1 {
        return if m[0] + 1 < grid.counts()[0] {
            vec![n]
        } else {
            vec![]
        };
    }
    let cx = grid.counts()[0] - 1;
    let cy = grid.counts()[1] - 1;
    let mut out = Vec::new();
    if m[0] < cx && m[1] < cy {
        let cell = m[1] * cx + m[0];
        // bottom and left edges of the cell whose lower-left corner is n
        out.push(4 * cell);
        out.push(4 * cell + 2);
    }
    if m[0] < cx && m[1] == cy {
        let cell = (m[1] - 1) * cx + m[0];
        out.push(4 * cell + 1);
    }
    if m[1] < cy && m[0] == cx {
        let cell = m[1] * cx + m[0] - 1;
        out.push(4 * cell + 3);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::extract_free_boundary;
    use crate::grid::Grid;

    #[test]
    fn affine_and_zero() {
        let grid = Grid::new_2d([21, 11], [0.0, 0.0], [2.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(grid, |x| 3.0 * x[0] - 4.0 * x[1]);
        assert!((max_gradient_interior(&u, 0.2).unwrap() - 5.0).abs() < 1e-12);
        let z = ScalarField::zeros(grid);
        assert_eq!(max_gradient_interior(&z, 0.2).unwrap(), 0.0);
        assert!(max_gradient_interior(&z, 0.6).is_err());
    }

    #[test]
    fn every_sample_is_reached_once() {
        let grid = Grid::new_2d([5, 4], [0.0, 0.0], [1.0, 1.0]).unwrap();
        let mut seen = vec![0; grid.num_samples()];
        for n in 0..grid.num_nodes() {
            for s in samples_at_node(&grid, n) {
                seen[s] += 1;
            }
        }
        // 16 horizontal and 15 vertical edges, each reached exactly once
        assert!(seen.iter().all(|&c| c <= 1));
        assert_eq!(seen.iter().filter(|&&c| c == 1).count(), 31);
    }

    #[test]
    fn planar_upper_bound() {
        let grid = Grid::new_2d([41, 41], [-1.0, -1.0], [1.0, 1.0]).unwrap();
        let p = ExponentField::constant(grid, 2.0).unwrap();
        let u = ScalarField::from_fn(grid, |x| 1.2 * x[0].max(0.0));
        let fb = extract_free_boundary(&u, 0.01).unwrap();
        let r = upper_gradient_ratio(&u, &p, 0.5, &fb, 0.25)
            .unwrap()
            .unwrap();
        assert!((r - 1.2).abs() < 1e-12);
    }
}
