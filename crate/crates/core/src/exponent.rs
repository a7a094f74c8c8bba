//! Variable exponents and the associated Lebesgue-space machinery: modular,
//! Luxemburg norm and empirical checks of the classical inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, gradient, Grid, ScalarField, VectorField};

const LOG_HOLDER_RANGE: f64 = 0.5;
const LOG_HOLDER_FULL_LIMIT: usize = 10_000;
const LOG_HOLDER_SAMPLES: usize = 1_000_000;
const LOG_HOLDER_SEED: u64 = 0x5eed_1096;
const LUXEMBURG_RTOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentField {
    grid: Grid,
    values: Vec<f64>,
    p_min: f64,
    p_max: f64,
    lipschitz: f64,
}

impl ExponentField {
    /// Checks `1 < p_min <= p_i <= p_max` and the discrete Lipschitz bound
    /// between every node and its (diagonal) neighbours.
    pub fn new(
        grid: Grid,
        values: Vec<f64>,
        p_min: f64,
        p_max: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidExponent(format!(
                "expected {} values, got {}",
                grid.num_nodes(),
                values.len()
            )));
        }
        if !(p_min > 1.0 && p_min <= p_max && p_max.is_finite()) {
            return Err(Error::InvalidExponent(format!(
                "bounds must satisfy 1 < p_min <= p_max < inf (got {p_min}, {p_max})"
            )));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidExponent(format!(
                "Lipschitz bound must be finite and nonnegative (got {lipschitz})"
            )));
        }
        if let Some((i, &p)) = values
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p >= p_min && p <= p_max))
        {
            return Err(Error::InvalidExponent(format!(
                "p = {p} at node {i} outside [{p_min}, {p_max}]"
            )));
        }
        let observed = neighbour_slope(&grid, &values);
        if observed > lipschitz * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvalidExponent(format!(
                "discrete slope {observed} exceeds declared Lipschitz bound {lipschitz}"
            )));
        }
        Ok(ExponentField {
            grid,
            values,
            p_min,
            p_max,
            lipschitz,
        })
    }

    pub fn constant(grid: Grid, p: f64) -> Result<Self> {
        Self::new(grid, vec![p; grid.num_nodes()], p, p, 0.0)
    }

    /// Samples `f` at the nodes; bounds and Lipschitz constant are taken from
    /// the samples themselves.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.num_nodes())
            .map(|i| f(&grid.node_coords(i)[..grid.dim()]))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lip = neighbour_slope(&grid, &values);
        Self::new(grid, values, lo, hi, lip)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&p| p == self.values[0])
    }

    /// Exponent at every gradient sample: mean of the two nodes of the edge.
    pub fn sample_values(&self) -> Vec<f64> {
        (0..self.grid.num_samples())
            .map(|s| {
                let [a, b] = self.grid.sample_edge(s);
                0.5 * (self.values[a] + self.values[b])
            })
            .collect()
    }

    /// Multilinear interpolation of the exponent.
    pub fn at(&self, point: &[f64]) -> Result<f64> {
        crate::grid::interpolate_values(&self.grid, &self.values, point)
    }

    /// `(inf, sup)` of the nodal exponent over the closed ball, falling back
    /// to the interpolated value when the ball holds no node.
    pub fn local_range(&self, center: &[f64], radius: f64) -> Result<(f64, f64)> {
        let nodes = self.grid.nodes_in_ball(center, radius);
        if nodes.is_empty() {
            let p = self.at(center)?;
            return Ok((p, p));
        }
        let lo = nodes
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::INFINITY, f64::min);
        let hi = nodes
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    /// Pointwise conjugate exponent `p / (p - 1)`.
    pub fn conjugate(&self) -> Result<Self> {
        let values = self.values.iter().map(|&p| p / (p - 1.0)).collect();
        Self::from_values(self.grid, values)
    }
}

fn neighbour_slope(grid: &Grid, values: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let offsets: &[(i64, i64)] = if grid.dim() == 1 {
        &[(1, 0)]
    } else {
        &[(1, 0), (0, 1), (1, 1), (-1, 1)]
    };
    let counts = grid.counts();
    let ny = if grid.dim() == 1 { 1 } else { counts[1] };
    for j in 0..ny {
        for i in 0..counts[0] {
            let a = grid.node_index([i, j]);
            for &(di, dj) in offsets {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= counts[0] as i64 || jj >= ny as i64 {
                    continue;
                }
                let b = grid.node_index([ii as usize, jj as usize]);
                let dx = di as f64 * grid.spacing(0);
                let dy = if grid.dim() == 2 {
                    dj as f64 * grid.spacing(1)
                } else {
                    0.0
                };
                let dist = (dx * dx + dy * dy).sqrt();
                worst = worst.max((values[a] - values[b]).abs() / dist);
            }
        }
    }
    worst
}

/// `sum_k w_k |v_k / scale|^{p_k}`.
fn modular_terms(terms: &[(f64, f64, f64)], scale: f64) -> f64 {
    terms.iter().map(|&(v, p, w)| w * (v / scale).powf(p)).sum()
}

fn luxemburg_terms(terms: &[(f64, f64, f64)]) -> f64 {
    let active: Vec<(f64, f64, f64)> = terms
        .iter()
        .copied()
        .filter(|&(v, _, w)| v > 0.0 && w > 0.0)
        .collect();
    if active.is_empty() {
        return 0.0;
    }
    let rho = modular_terms(&active, 1.0);
    let pmin = active.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let pmax = active.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = (rho.powf(1.0 / pmin), rho.powf(1.0 / pmax));
    let mut lo = a.min(b) * (1.0 - 1e-9);
    let mut hi = a.max(b) * (1.0 + 1e-9);
    // The bracket is exact in exact arithmetic; widen if rounding bites.
    while modular_terms(&active, lo) < 1.0 {
        lo *= 0.5;
    }
    while modular_terms(&active, hi) > 1.0 {
        hi *= 2.0;
    }
    while hi / lo - 1.0 > LUXEMBURG_RTOL {
        let mid = (lo * hi).sqrt();
        if modular_terms(&active, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    (lo * hi).sqrt()
}

fn scalar_terms(u: &ScalarField, p: &ExponentField) -> Result<Vec<(f64, f64, f64)>> {
    ensure_same_grid(u.grid(), p.grid())?;
    let grid = u.grid();
    Ok(u.values()
        .iter()
        .zip(p.values())
        .enumerate()
        .map(|(i, (&v, &q))| (v.abs(), q, grid.node_weight(i)))
        .collect())
}

fn vector_terms(f: &VectorField, p: &ExponentField) -> Result<Vec<(f64, f64, f64)>> {
    ensure_same_grid(f.grid(), p.grid())?;
    let w = f.grid().sample_weight();
    Ok(p.sample_values()
        .into_iter()
        .enumerate()
        .map(|(s, q)| (f.norm_at(s), q, w))
        .collect())
}

/// `int |u|^{p(x)} dx` with the nodal trapezoid rule.
pub fn modular(u: &ScalarField, p: &ExponentField) -> Result<f64> {
    Ok(modular_terms(&scalar_terms(u, p)?, 1.0))
}

/// Luxemburg norm `inf { l > 0 : modular(u / l) <= 1 }` by bisection.
pub fn luxemburg_norm(u: &ScalarField, p: &ExponentField) -> Result<f64> {
    Ok(luxemburg_terms(&scalar_terms(u, p)?))
}

/// Modular of `|F|` over the gradient samples, with edge-averaged exponents.
pub fn modular_vector(f: &VectorField, p: &ExponentField) -> Result<f64> {
    Ok(modular_terms(&vector_terms(f, p)?, 1.0))
}

pub fn luxemburg_norm_vector(f: &VectorField, p: &ExponentField) -> Result<f64> {
    Ok(luxemburg_terms(&vector_terms(f, p)?))
}

/// Largest `|p_i - p_j| |log |x_i - x_j||` over node pairs closer than 1/2.
///
/// Every pair is visited on grids with at most ten thousand nodes; larger
/// grids use a fixed-seed sample of a million pairs.
pub fn check_log_holder(p: &ExponentField) -> f64 {
    let grid = p.grid();
    let n = grid.num_nodes();
    let vals = p.values();
    let pair = |i: usize, j: usize| -> f64 {
        let (xi, xj) = (grid.node_coords(i), grid.node_coords(j));
        let d = ((xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2)).sqrt();
        if d > 0.0 && d < LOG_HOLDER_RANGE {
            (vals[i] - vals[j]).abs() * d.ln().abs()
        } else {
            0.0
        }
    };
    let mut worst: f64 = 0.0;
    if n <= LOG_HOLDER_FULL_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max(pair(i, j));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(LOG_HOLDER_SEED);
        for _ in 0..LOG_HOLDER_SAMPLES {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            worst = worst.max(pair(i, j));
        }
    }
    worst
}

/// `int |f||g| / (2 ||f||_{p} ||g||_{p'})`; 0 when either side vanishes.
pub fn holder_inequality_check(f: &ScalarField, g: &ScalarField, p: &ExponentField) -> Result<f64> {
    ensure_same_grid(f.grid(), g.grid())?;
    ensure_same_grid(f.grid(), p.grid())?;
    let grid = f.grid();
    let lhs: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .enumerate()
        .map(|(i, (a, b))| (a * b).abs() * grid.node_weight(i))
        .sum();
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let nf = luxemburg_norm(f, p)?;
    let ng = luxemburg_norm(g, &p.conjugate()?)?;
    Ok(lhs / (2.0 * nf * ng))
}

/// `||u||_{p} / ||grad u||_{p}` for `u` vanishing on the boundary.
pub fn poincare_ratio(u: &ScalarField, p: &ExponentField) -> Result<f64> {
    ensure_same_grid(u.grid(), p.grid())?;
    let scale = u.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for node in u.grid().boundary_nodes() {
        let v = u.values()[node];
        if v.abs() > 1e-12 * scale {
            return Err(Error::NonZeroBoundary { node, value: v });
        }
    }
    let grad = gradient(u);
    let denom = luxemburg_norm_vector(&grad, p)?;
    if denom == 0.0 {
        return Err(Error::Degenerate("gradient vanishes identically".into()));
    }
    Ok(luxemburg_norm(u, p)? / denom)
}
