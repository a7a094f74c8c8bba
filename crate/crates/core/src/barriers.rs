//! Gaussian annulus barrier, its subsolution check, the pointwise
//! monotonicity inequality of the flux and the annulus comparison test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{divergence, interpolate, ScalarField};
use crate::solver::{flux, flux_vector};

/// `psi(x) = A (exp(-mu |x - x0|^2 / delta^2) - exp(-mu)) / (exp(-mu / 16) - exp(-mu))`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSpec {
    center: Vec<f64>,
    mu: f64,
    delta: f64,
    amplitude: f64,
    d_target: f64,
}

impl BarrierSpec {
    pub fn new(center: &[f64], mu: f64, delta: f64, amplitude: f64, d_target: f64) -> Result<Self> {
        if center.is_empty() || center.len() > 2 || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::OutOfRange {
                name: "center",
                reason: format!("expected one or two finite coordinates, got {center:?}"),
            });
        }
        for (name, v) in [
            ("mu", mu),
            ("delta", delta),
            ("amplitude", amplitude),
            ("d_target", d_target),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::OutOfRange {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if delta > amplitude {
            return Err(Error::OutOfRange {
                name: "delta",
                reason: format!("must not exceed the amplitude {amplitude}, got {delta}"),
            });
        }
        Ok(BarrierSpec {
            center: center.to_vec(),
            mu,
            delta,
            amplitude,
            d_target,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn d_target(&self) -> f64 {
        self.d_target
    }

    fn scale(&self) -> f64 {
        self.amplitude / ((-self.mu / 16.0).exp() - (-self.mu).exp())
    }

    fn radius2(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    }

    fn in_annulus(&self, x: &[f64]) -> bool {
        let r = self.radius2(x).sqrt();
        r > 0.25 * self.delta && r < self.delta
    }
}

pub fn barrier_value(spec: &BarrierSpec, x: &[f64]) -> f64 {
    let s2 = spec.radius2(x) / (spec.delta * spec.delta);
    spec.scale() * ((-spec.mu * s2).exp() - (-spec.mu).exp())
}

/// Closed-form Laplacian of the barrier in `x.len()` dimensions.
pub fn barrier_laplacian(spec: &BarrierSpec, x: &[f64]) -> f64 {
    let d2 = spec.delta * spec.delta;
    let r2 = spec.radius2(x);
    let n = x.len() as f64;
    let mu = spec.mu;
    spec.scale() * (-mu * r2 / d2).exp() * (4.0 * mu * mu * r2 / (d2 * d2) - 2.0 * n * mu / d2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierCheck {
    /// Minimum of the discrete `Δ_p psi` over annulus nodes and random points.
    pub min: f64,
    /// Minimum over annulus nodes only.
    pub node_min: f64,
    /// Closed-form `Δ psi` minimized over the same nodes.
    pub closed_form_node_min: f64,
    pub nodes: usize,
    pub samples: usize,
    /// `min >= d_target`.
    pub meets_target: bool,
}

/// Evaluates the discrete `p(x)`-Laplacian of the barrier (no
/// regularization) at every node of the open annulus `delta/4 < r < delta`
/// and at `n_samples` random points in it, interpolating the nodal values.
pub fn barrier_subsolution_check(
    spec: &BarrierSpec,
    p: &ExponentField,
    n_samples: usize,
    seed: u64,
) -> Result<BarrierCheck> {
    let grid = *p.grid();
    let d = grid.dim();
    if spec.center.len() != d {
        return Err(Error::OutsideDomain(spec.center.clone()));
    }
    if grid.distance_to_boundary(&spec.center) < spec.delta + 2.0 * grid.h() {
        return Err(Error::Precondition(
            "barrier annulus must lie inside the domain".into(),
        ));
    }
    let psi = ScalarField::from_fn(grid, |x| barrier_value(spec, x));
    let lap = divergence(&flux(&psi, p, 0.0)?);
    let mut node_min = f64::INFINITY;
    let mut closed = f64::INFINITY;
    let mut nodes = 0;
    for n in grid.nodes_in_ball(&spec.center, spec.delta) {
        let x = &grid.node_coords(n)[..d];
        if spec.in_annulus(x) {
            nodes += 1;
            node_min = node_min.min(lap.values()[n]);
            closed = closed.min(barrier_laplacian(spec, x));
        }
    }
    if nodes == 0 {
        return Err(Error::Precondition(
            "no grid nodes inside the barrier annulus".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min = node_min;
    let mut samples = 0;
    while samples < n_samples {
        let mut x = vec![0.0; d];
        for (a, xa) in x.iter_mut().enumerate() {
            *xa = spec.center[a] + spec.delta * rng.random_range(-1.0..1.0);
        }
        if !spec.in_annulus(&x) {
            continue;
        }
        min = min.min(interpolate(&lap, &x)?);
        samples += 1;
    }
    Ok(BarrierCheck {
        min,
        node_min,
        closed_form_node_min: closed,
        nodes,
        samples,
        meets_target: min >= spec.d_target,
    })
}

/// The two sides `(lhs, rhs)` of the monotonicity inequality
/// `lhs <= C rhs`, where `rhs = (A(eta) - A(xi))·(eta - xi)` with
/// `A(v) = |v|^(p-2) v`, and `lhs = |eta - xi|^p` for `p >= 2` or
/// `|eta - xi|^2 (|eta| + |xi|)^(p-2)` for `p < 2`.
pub fn monotonicity_check(eta: &[f64], xi: &[f64], p: f64) -> Result<(f64, f64)> {
    if eta.len() != xi.len() || eta.is_empty() || eta.len() > 2 {
        return Err(Error::OutOfRange {
            name: "eta",
            reason: "vectors must have matching length 1 or 2".into(),
        });
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            reason: format!("must exceed 1, got {p}"),
        });
    }
    let mut e = [0.0; 2];
    let mut x = [0.0; 2];
    e[..eta.len()].copy_from_slice(eta);
    x[..xi.len()].copy_from_slice(xi);
    let ae = flux_vector(e, p, 0.0);
    let ax = flux_vector(x, p, 0.0);
    let diff = [e[0] - x[0], e[1] - x[1]];
    let rhs = (ae[0] - ax[0]) * diff[0] + (ae[1] - ax[1]) * diff[1];
    let dist = diff[0].hypot(diff[1]);
    let lhs = if p >= 2.0 {
        dist.powf(p)
    } else {
        let s = e[0].hypot(e[1]) + x[0].hypot(x[1]);
        if s > 0.0 {
            dist * dist * s.powf(p - 2.0)
        } else {
            0.0
        }
    };
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusComparison {
    pub center: Vec<f64>,
    /// Distance from the center to the nearest node with `u <= eps`.
    pub delta: f64,
    /// `inf (u - eps)` over the nodes of the closed ball of radius `delta/4`.
    pub amplitude: f64,
    /// `max (psi - (u - eps))` over the nodes with `delta/4 <= r < delta`.
    pub max_violation: f64,
    pub nodes: usize,
}

impl AnnulusComparison {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Builds the barrier around `center` in `{u > eps}` with radius the
/// distance to `{u <= eps}` and amplitude the infimum of `u - eps` on the
/// inner ball, then compares it with `u - eps` at the annulus nodes.
pub fn annulus_comparison(
    u: &ScalarField,
    eps: f64,
    center: &[f64],
    mu: f64,
) -> Result<AnnulusComparison> {
    let grid = u.grid();
    let d = grid.dim();
    if center.len() != d || !grid.contains(center) {
        return Err(Error::OutsideDomain(center.to_vec()));
    }
    let v = u.values();
    let dist = |n: usize| -> f64 {
        let x = grid.node_coords(n);
        (0..d)
            .map(|a| (x[a] - center[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let delta = (0..grid.num_nodes())
        .filter(|&n| v[n] <= eps)
        .map(dist)
        .fold(f64::INFINITY, f64::min);
    if !delta.is_finite() {
        return Err(Error::Precondition("u exceeds eps everywhere".into()));
    }
    if grid.distance_to_boundary(center) < delta {
        return Err(Error::Precondition(
            "the ball reaching {u <= eps} leaves the domain".into(),
        ));
    }
    let amplitude = grid
        .nodes_in_ball(center, 0.25 * delta)
        .iter()
        .map(|&n| v[n] - eps)
        .fold(f64::INFINITY, f64::min);
    if !(amplitude > 0.0) {
        return Err(Error::Precondition(format!(
            "center must lie in {{u > eps}} at distance resolved by the grid, got delta {delta}"
        )));
    }
    let spec = BarrierSpec::new(center, mu, delta, amplitude.max(delta), 1.0)?;
    // amplitude may be below delta; rescale the unit-amplitude profile
    let unit = amplitude / spec.amplitude();
    let mut max_violation = f64::NEG_INFINITY;
    let mut nodes = 0;
    for n in grid.nodes_in_ball(center, delta) {
        let x = &grid.node_coords(n)[..d];
        let r = dist(n);
        if r >= 0.25 * delta && r < delta {
            nodes += 1;
            let psi = unit * barrier_value(&spec, x);
            max_violation = max_violation.max(psi - (v[n] - eps));
        }
    }
    Ok(AnnulusComparison {
        center: center.to_vec(),
        delta,
        amplitude,
        max_violation,
        nodes,
    })
}
