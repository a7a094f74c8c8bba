use std::io::Write;

use super::{norm2, GradientInterp};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{ensure_same_grid, interpolate, ScalarField};
use crate::reaction::lambda_star;

const DEGENERATE_GRADIENT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FreeBoundaryPoint {
    pub position: [f64; 2],
    /// Unit normal pointing into `{u > threshold}`.
    pub normal: [f64; 2],
    /// Filled by [`slope_report`].
    pub slope: Option<f64>,
    pub lambda_star: Option<f64>,
    pub rel_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeBoundaryReport {
    pub threshold: f64,
    pub points: Vec<FreeBoundaryPoint>,
    /// Level-set pieces (marching squares in 2D, empty in 1D).
    pub segments: Vec<[[f64; 2]; 2]>,
    /// Crossings dropped because the gradient vanished there.
    pub excluded: usize,
    pub mean_rel_error: Option<f64>,
    pub max_rel_error: Option<f64>,
    pub mean_slope: Option<f64>,
}

impl FreeBoundaryReport {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of points in 1D, polyline length in 2D.
    pub fn measure(&self, dim: usize) -> f64 {
        if dim == 1 {
            self.points.len() as f64
        } else {
            self.segments
                .iter()
                .map(|[a, b]| norm2([b[0] - a[0], b[1] - a[1]]))
                .sum()
        }
    }

    /// CSV with one row per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,nx,ny,slope,lambda_star,rel_error")?;
        let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
        for p in &self.points {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{},{},{}",
                p.position[0],
                p.position[1],
                p.normal[0],
                p.normal[1],
                opt(p.slope),
                opt(p.lambda_star),
                opt(p.rel_error)
            )?;
        }
        Ok(())
    }
}

fn crossing(xa: [f64; 2], xb: [f64; 2], ua: f64, ub: f64, tau: f64) -> [f64; 2] {
    let t = (ua - tau) / (ua - ub);
    [xa[0] + t * (xb[0] - xa[0]), xa[1] + t * (xb[1] - xa[1])]
}

/// Points where `u` crosses `tau` along grid edges, with normals from the
/// interpolated gradient.
pub fn extract_free_boundary(u: &ScalarField, tau: f64) -> Result<FreeBoundaryReport> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::OutOfRange {
            name: "threshold",
            reason: format!("must be positive, got {tau}"),
        });
    }
    let grid = *u.grid();
    let v = u.values();
    let inside = |i: usize| v[i] > tau;
    let grad = GradientInterp::new(u);
    let mut positions: Vec<[f64; 2]> = Vec::new();
    let mut segments = Vec::new();
    if grid.dim() == 1 {
        for i in 0..grid.num_nodes() - 1 {
            if inside(i) != inside(i + 1) {
                positions.push(crossing(
                    grid.node_coords(i),
                    grid.node_coords(i + 1),
                    v[i],
                    v[i + 1],
                    tau,
                ));
            }
        }
    } else {
        let [nx, ny] = [grid.counts()[0], grid.counts()[1]];
        const NONE: usize = usize::MAX;
        let mut hedge = vec![NONE; (nx - 1) * ny];
        let mut vedge = vec![NONE; nx * (ny - 1)];
        for j in 0..ny {
            for i in 0..nx {
                let a = grid.node_index([i, j]);
                if i + 1 < nx && inside(a) != inside(a + 1) {
                    hedge[j * (nx - 1) + i] = positions.len();
                    positions.push(crossing(
                        grid.node_coords(a),
                        grid.node_coords(a + 1),
                        v[a],
                        v[a + 1],
                        tau,
                    ));
                }
                if j + 1 < ny && inside(a) != inside(a + nx) {
                    vedge[j * nx + i] = positions.len();
                    positions.push(crossing(
                        grid.node_coords(a),
                        grid.node_coords(a + nx),
                        v[a],
                        v[a + nx],
                        tau,
                    ));
                }
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let a = grid.node_index([i, j]);
                let (b, c, d) = (a + 1, a + nx, a + nx + 1);
                let bottom = hedge[j * (nx - 1) + i];
                let top = hedge[(j + 1) * (nx - 1) + i];
                let left = vedge[j * nx + i];
                let right = vedge[j * nx + i + 1];
                let ids: Vec<usize> = [bottom, right, top, left]
                    .into_iter()
                    .filter(|&k| k != NONE)
                    .collect();
                let mut push = |p: usize, q: usize| segments.push([positions[p], positions[q]]);
                match ids.len() {
                    2 => push(ids[0], ids[1]),
                    4 => {
                        let center = 0.25 * (v[a] + v[b] + v[c] + v[d]) > tau;
                        if center == inside(a) {
                            push(bottom, right);
                            push(top, left);
                        } else {
                            push(bottom, left);
                            push(top, right);
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    let mut points = Vec::with_capacity(positions.len());
    let mut excluded = 0;
    let d = grid.dim();
    for x in positions {
        let g = grad.at(&x[..d])?;
        let n = norm2(g);
        if n < DEGENERATE_GRADIENT {
            excluded += 1;
            continue;
        }
        points.push(FreeBoundaryPoint {
            position: x,
            normal: [g[0] / n, g[1] / n],
            slope: None,
            lambda_star: None,
            rel_error: None,
        });
    }
    Ok(FreeBoundaryReport {
        threshold: tau,
        points,
        segments,
        excluded,
        mean_rel_error: None,
        max_rel_error: None,
        mean_slope: None,
    })
}

/// Measures the one-sided slope at every free-boundary point by two-point
/// Richardson extrapolation of `(u(x0 + s nu) - tau) / s` over
/// `s = k h, 2 k h`, and compares with `lambda_star(p(x0), mass)`.
pub fn slope_report(
    u: &ScalarField,
    p: &ExponentField,
    mass: f64,
    fb: &FreeBoundaryReport,
    k: f64,
) -> Result<FreeBoundaryReport> {
    ensure_same_grid(u.grid(), p.grid())?;
    if !(k > 0.0) {
        return Err(Error::OutOfRange {
            name: "k",
            reason: format!("probe multiple must be positive, got {k}"),
        });
    }
    let grid = u.grid();
    let d = grid.dim();
    let s1 = k * grid.h();
    let tau = fb.threshold;
    let mut out = fb.clone();
    let mut errs = Vec::with_capacity(out.points.len());
    let mut slopes = Vec::with_capacity(out.points.len());
    for pt in &mut out.points {
        let probe = |s: f64| -> Result<f64> {
            let x: Vec<f64> = (0..d).map(|a| pt.position[a] + s * pt.normal[a]).collect();
            if !grid.contains(&x) {
                return Err(Error::OutsideDomain(x));
            }
            Ok((interpolate(u, &x)? - tau) / s)
        };
        let slope = (2.0 * probe(s1)? - probe(2.0 * s1)?).max(0.0);
        let lam = lambda_star(p.at(&pt.position[..d])?, mass)?;
        let rel = (slope - lam).abs() / lam;
        pt.slope = Some(slope);
        pt.lambda_star = Some(lam);
        pt.rel_error = Some(rel);
        errs.push(rel);
        slopes.push(slope);
    }
    if !errs.is_empty() {
        let n = errs.len() as f64;
        out.mean_rel_error = Some(errs.iter().sum::<f64>() / n);
        out.max_rel_error = Some(errs.iter().cloned().fold(0.0, f64::max));
        out.mean_slope = Some(slopes.iter().sum::<f64>() / n);
    }
    Ok(out)
}
