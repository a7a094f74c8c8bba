use std::f64::consts::PI;

use super::FreeBoundaryPoint;
use crate::error::{Error, Result};
use crate::grid::{interpolate, ScalarField};

const RADIAL_POINTS: usize = 24;
const ANGULAR_POINTS: usize = 128;
const LINE_POINTS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyEntry {
    pub point: [f64; 2],
    pub radius: f64,
    /// Ball average of `u` divided by `r`.
    pub ball_ratio: f64,
    /// Sphere average of `u` divided by `r`.
    pub sphere_ratio: f64,
    /// `sup_{B_r} u / r`.
    pub sup_ratio: f64,
    /// `|{u < tau_zero} ∩ B_r| / |B_r|`.
    pub zero_density: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyReport {
    pub tau_zero: f64,
    pub entries: Vec<NondegeneracyEntry>,
}

impl NondegeneracyReport {
    /// Smallest value of each of the three ratios over all entries.
    pub fn min_ratios(&self) -> Option<[f64; 3]> {
        if self.entries.is_empty() {
            return None;
        }
        let mut m = [f64::INFINITY; 3];
        for e in &self.entries {
            m[0] = m[0].min(e.ball_ratio);
            m[1] = m[1].min(e.sphere_ratio);
            m[2] = m[2].min(e.sup_ratio);
        }
        Some(m)
    }

    /// Largest pairwise quotient among the three ratios at one entry.
    pub fn max_spread(&self) -> Option<f64> {
        self.entries
            .iter()
            .map(|e| {
                let v = [e.ball_ratio, e.sphere_ratio, e.sup_ratio];
                let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                hi / lo
            })
            .reduce(f64::max)
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// The three nondegeneracy ratios and the zero-set density at each point and
/// radius. Balls must lie inside the domain.
pub fn nondegeneracy_report(
    u: &ScalarField,
    points: &[FreeBoundaryPoint],
    radii: &[f64],
    tau_zero: f64,
) -> Result<NondegeneracyReport> {
    let grid = u.grid();
    let d = grid.dim();
    let (gx, gw) = gauss_legendre(if d == 1 { LINE_POINTS } else { RADIAL_POINTS });
    let mut entries = Vec::with_capacity(points.len() * radii.len());
    for pt in points {
        let c = &pt.position[..d];
        for &r in radii {
            if !(r > 0.0) {
                return Err(Error::OutOfRange {
                    name: "radius",
                    reason: format!("must be positive, got {r}"),
                });
            }
            if grid.distance_to_boundary(c) < r {
                return Err(Error::Precondition(format!(
                    "ball of radius {r} around {c:?} is clipped by the boundary"
                )));
            }
            let mut sup = grid
                .nodes_in_ball(c, r)
                .iter()
                .map(|&n| u.values()[n])
                .fold(f64::NEG_INFINITY, f64::max);
            let mut ball = 0.0;
            let mut zero = 0.0;
            let sphere;
            if d == 1 {
                // [c - r, c + r] mapped from two copies of [0, 1]
                for (t, w) in gx.iter().zip(&gw) {
                    for x in [c[0] - r + t * r, c[0] + t * r] {
                        let v = interpolate(u, &[x])?;
                        ball += 0.5 * w * v;
                        if v < tau_zero {
                            zero += 0.5 * w;
                        }
                        sup = sup.max(v);
                    }
                }
                let a = interpolate(u, &[c[0] - r])?;
                let b = interpolate(u, &[c[0] + r])?;
                sphere = 0.5 * (a + b);
                sup = sup.max(a).max(b);
            } else {
                let mut ring = 0.0;
                for k in 0..ANGULAR_POINTS {
                    let th = 2.0 * PI * k as f64 / ANGULAR_POINTS as f64;
                    let (s, co) = th.sin_cos();
                    let v = interpolate(u, &[c[0] + r * co, c[1] + r * s])?;
                    ring += v;
                    sup = sup.max(v);
                    // interior rays sit between the ring angles
                    let (s, co) = (th + PI / ANGULAR_POINTS as f64).sin_cos();
                    for (t, w) in gx.iter().zip(&gw) {
                        let rho = t * r;
                        let v = interpolate(u, &[c[0] + rho * co, c[1] + rho * s])?;
                        // area element rho d(rho) d(theta) over pi r^2
                        let wt = w * 2.0 * t / ANGULAR_POINTS as f64;
                        ball += wt * v;
                        if v < tau_zero {
                            zero += wt;
                        }
                        sup = sup.max(v);
                    }
                }
                sphere = ring / ANGULAR_POINTS as f64;
            }
            entries.push(NondegeneracyEntry {
                point: pt.position,
                radius: r,
                ball_ratio: ball / r,
                sphere_ratio: sphere / r,
                sup_ratio: sup / r,
                zero_density: zero,
            });
        }
    }
    Ok(NondegeneracyReport { tau_zero, entries })
}
