//! Independent 1D oracle built from the first integral
//! `((p - 1) / p) |u'|^p = B_eps(u)` of the reaction-diffusion profile with
//! constant exponent and no forcing.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::reaction::{lambda_star, ReactionProfile};

const GK_TOL: f64 = 1e-10;
const GK_MAX_PIECES: usize = 4000;
const TABLE_POINTS: usize = 4000;

// Gauss-Kronrod 7-15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod integral of `f` over `[a, b]` to absolute
/// `tol`: the piece with the largest error estimate is bisected until the
/// summed estimate meets the tolerance or reaches the roundoff floor.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut heap = std::collections::BinaryHeap::new();
    let (value, err) = gk15(&mut f, a, b);
    heap.push(Piece { a, b, value, err });
    for _ in 0..GK_MAX_PIECES {
        let total: f64 = heap.iter().map(|p| p.value).sum();
        let errsum: f64 = heap.iter().map(|p| p.err).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if errsum <= tol
            || errsum <= 50.0 * f64::EPSILON * heap.iter().map(|p| p.value.abs()).sum::<f64>()
        {
            return Ok(total);
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            let total: f64 = heap.iter().map(|p| p.value).sum();
            return Ok(total);
        }
        for (lo, hi) in [(worst.a, m), (m, worst.b)] {
            let (value, err) = gk15(&mut f, lo, hi);
            heap.push(Piece {
                a: lo,
                b: hi,
                value,
                err,
            });
        }
    }
    let errsum: f64 = heap.iter().map(|p| p.err).sum();
    Err(Error::Quadrature(format!(
        "error estimate {errsum:e} above {tol:e} on [{a}, {b}]"
    )))
}

/// Tabulated reaction-layer profile. `x[k]` is the distance from the
/// `u = eps` edge at which the profile takes the value `u[k]`; `u` decreases
/// from `eps` to the floor while `x` increases from 0.
#[derive(Clone, Debug)]
pub struct Profile1D {
    reaction: ReactionProfile,
    eps: f64,
    p: f64,
    u: Vec<f64>,
    x: Vec<f64>,
    lambda_edge: f64,
}

impl Profile1D {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x
    }

    pub fn lambda_edge(&self) -> f64 {
        self.lambda_edge
    }

    pub fn u_floor(&self) -> f64 {
        self.u[self.u.len() - 1]
    }

    /// Distance from the edge to the floor value.
    pub fn length(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// `|u'|` where the profile equals `u`.
    pub fn slope(&self, u: f64) -> f64 {
        profile_slope(&self.reaction, self.p, self.eps, u)
    }

    /// `x(u)` for `u` in `[u_floor, eps]`.
    pub fn x_at(&self, u: f64) -> Result<f64> {
        if !(u >= self.u_floor() && u <= self.eps) {
            return Err(Error::OutOfRange {
                name: "u",
                reason: format!("{u} outside [{}, {}]", self.u_floor(), self.eps),
            });
        }
        let k = self.u.partition_point(|&v| v > u).saturating_sub(1);
        let t0 = (self.eps / self.u[k]).ln();
        let t1 = (self.eps / u).ln();
        Ok(self.x[k] + self.t_integral(t0, t1)?)
    }

    /// Profile value at distance `x >= 0` from the edge, down to the floor.
    pub fn u_at(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x <= self.length()) {
            return Err(Error::OutOfRange {
                name: "x",
                reason: format!("{x} outside [0, {}]", self.length()),
            });
        }
        let k = self
            .x
            .partition_point(|&v| v <= x)
            .saturating_sub(1)
            .min(self.x.len() - 2);
        let (xa, xb) = (self.x[k], self.x[k + 1]);
        let (ta, tb) = ((self.eps / self.u[k]).ln(), (self.eps / self.u[k + 1]).ln());
        // Newton in t = ln(eps / u): dx/dt = u / slope(u).
        let mut t = if xb > xa {
            ta + (tb - ta) * (x - xa) / (xb - xa)
        } else {
            ta
        };
        for _ in 0..50 {
            let g = xa + self.t_integral(ta, t)? - x;
            let u = self.eps * (-t).exp();
            let dg = u / self.slope(u);
            let step = g / dg;
            t = (t - step).clamp(ta, tb);
            if step.abs() <= 1e-15 * t.abs().max(1.0) {
                break;
            }
        }
        Ok(self.eps * (-t).exp())
    }

    fn t_integral(&self, t0: f64, t1: f64) -> Result<f64> {
        let (r, p, eps) = (&self.reaction, self.p, self.eps);
        integrate(
            |t| {
                let s = eps * (-t).exp();
                s / profile_slope(r, p, eps, s)
            },
            t0,
            t1,
            GK_TOL * 1e-3,
        )
    }

    /// CSV with columns `u,x,slope`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "u,x,slope")?;
        for (u, x) in self.u.iter().zip(&self.x) {
            writeln!(w, "{u:e},{x:e},{:e}", self.slope(*u))?;
        }
        Ok(())
    }
}

fn profile_slope(r: &ReactionProfile, p: f64, eps: f64, u: f64) -> f64 {
    (p / (p - 1.0) * r.big_b_eps_unchecked(u, eps)).powf(1.0 / p)
}

/// Tabulates `x(u) = int_u^eps ds / ((p/(p-1)) B_eps(s))^(1/p)` on a
/// log-spaced grid of `u` from `eps` down to `u_floor`.
pub fn profile_quadrature(
    reaction: &ReactionProfile,
    p: f64,
    eps: f64,
    u_floor: f64,
) -> Result<Profile1D> {
    let lambda_edge = lambda_star(p, reaction.mass())?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::OutOfRange {
            name: "eps",
            reason: format!("must be positive, got {eps}"),
        });
    }
    if !(u_floor > 0.0 && u_floor < eps) {
        return Err(Error::OutOfRange {
            name: "u_floor",
            reason: format!("must lie in (0, eps), got {u_floor}"),
        });
    }
    let t_end = (eps / u_floor).ln();
    let mut prof = Profile1D {
        reaction: reaction.clone(),
        eps,
        p,
        u: Vec::with_capacity(TABLE_POINTS + 1),
        x: Vec::with_capacity(TABLE_POINTS + 1),
        lambda_edge,
    };
    prof.u.push(eps);
    prof.x.push(0.0);
    let mut acc = 0.0;
    for k in 1..=TABLE_POINTS {
        let t0 = t_end * (k - 1) as f64 / TABLE_POINTS as f64;
        let t1 = t_end * k as f64 / TABLE_POINTS as f64;
        acc += prof.t_integral(t0, t1)?;
        prof.u.push(if k == TABLE_POINTS {
            u_floor
        } else {
            eps * (-t1).exp()
        });
        prof.x.push(acc);
    }
    Ok(prof)
}

/// Full 1D solution on `grid`: affine with slope `lambda_edge` from `u(0) = a`
/// down to `eps`, then the reaction-layer profile, then 0 below the floor.
pub fn compose_full_profile(profile: &Profile1D, a: f64, grid: &Grid) -> Result<ScalarField> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid(
            "the full profile lives on a 1D grid".into(),
        ));
    }
    if !(a > profile.eps) {
        return Err(Error::OutOfRange {
            name: "a",
            reason: format!("boundary value {a} must exceed eps = {}", profile.eps),
        });
    }
    let lam = profile.lambda_edge;
    let x_edge = (a - profile.eps) / lam;
    if x_edge + profile.length() > grid.extent(0) {
        return Err(Error::OutOfRange {
            name: "grid",
            reason: format!(
                "domain length {} cannot hold the profile (needs {})",
                grid.extent(0),
                x_edge + profile.length()
            ),
        });
    }
    let x0 = grid.lower(0);
    let mut vals = Vec::with_capacity(grid.num_nodes());
    for i in 0..grid.num_nodes() {
        let x = grid.node_coords(i)[0] - x0;
        let v = if x <= x_edge {
            a - lam * x
        } else if x - x_edge <= profile.length() {
            profile.u_at(x - x_edge)?
        } else {
            0.0
        };
        vals.push(v);
    }
    ScalarField::new(*grid, vals)
}

/// `int beta_eps(u(x)) dx` across the layer, computed as
/// `int_0^eps beta_eps(s) / |u'|(s) ds`.
pub fn oracle_reaction_integral(profile: &Profile1D) -> Result<f64> {
    let (r, p, eps) = (&profile.reaction, profile.p, profile.eps);
    integrate(
        |s| {
            let sl = profile_slope(r, p, eps, s);
            if sl == 0.0 {
                0.0
            } else {
                r.beta_eps_unchecked(s, eps) / sl
            }
        },
        0.0,
        eps,
        GK_TOL,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(m: f64) -> ReactionProfile {
        ReactionProfile::quadratic(m).unwrap()
    }

    #[test]
    fn gauss_kronrod_polynomials_and_singular() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
        let s = integrate(|x| 1.0 / x.sqrt(), 1e-12, 1.0, 1e-10).unwrap();
        assert!((s - 2.0 * (1.0 - 1e-6)).abs() < 1e-9);
    }

    #[test]
    fn edge_slopes() {
        let p2 = profile_quadrature(&quad(0.5), 2.0, 1e-3, 1e-9).unwrap();
        assert!((p2.slope(1e-3) - 1.0).abs() < 1e-14);
        assert!((p2.slope(0.5e-3) - 0.5f64.sqrt()).abs() < 1e-14);
        let p3 = profile_quadrature(&quad(1.0), 3.0, 1e-3, 1e-9).unwrap();
        assert!((p3.slope(1e-3) - 1.5f64.powf(1.0 / 3.0)).abs() < 1e-14);
        assert!((p3.lambda_edge().powi(3) * 2.0 / 3.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_is_monotone_and_invertible() {
        let pr = profile_quadrature(&quad(0.5), 2.0, 1e-2, 1e-8).unwrap();
        assert!(pr.x_values().windows(2).all(|w| w[1] > w[0]));
        assert!(pr.u_values().windows(2).all(|w| w[1] < w[0]));
        for x in [0.0, 1e-4, 3e-3, 0.01, 0.05, 0.9 * pr.length()] {
            let u = pr.u_at(x).unwrap();
            assert!((pr.x_at(u).unwrap() - x).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn profile_scales_with_eps() {
        let r = quad(0.5);
        let one = profile_quadrature(&r, 2.0, 1.0, 1e-6).unwrap();
        let eps = 3e-3;
        let small = profile_quadrature(&r, 2.0, eps, eps * 1e-6).unwrap();
        for k in 0..10 {
            let v = 10f64.powf(-0.5 * k as f64) * 0.999;
            let lhs = small.x_at(eps * v).unwrap();
            let rhs = eps * one.x_at(v).unwrap();
            assert!((lhs - rhs).abs() < 1e-11, "{lhs} {rhs}");
        }
    }

    #[test]
    fn reaction_integral_closed_form() {
        for (p, m) in [(2.0, 0.5), (3.0, 1.0), (2.5, 0.2)] {
            let pr = profile_quadrature(&quad(m), p, 1e-3, 1e-9).unwrap();
            let v = oracle_reaction_integral(&pr).unwrap();
            let exact = (p / (p - 1.0) * m).powf((p - 1.0) / p);
            assert!((v - exact).abs() < 1e-8, "{v} {exact}");
        }
        let tiny = profile_quadrature(&quad(1e-12), 2.0, 1e-3, 1e-9).unwrap();
        assert!(oracle_reaction_integral(&tiny).unwrap() < 1e-5);
    }

    #[test]
    fn reaction_integral_over_tabulated_profile() {
        // trapezoid over x of beta_eps(u(x)) on the table
        let r = quad(0.5);
        let eps = 1e-3;
        let pr = profile_quadrature(&r, 2.0, eps, eps * 1e-9).unwrap();
        let f: Vec<f64> = pr
            .u_values()
            .iter()
            .map(|&u| r.beta_eps(u, eps).unwrap())
            .collect();
        let mut acc = 0.0;
        for k in 1..f.len() {
            acc += 0.5 * (f[k] + f[k - 1]) * (pr.x_values()[k] - pr.x_values()[k - 1]);
        }
        assert!((acc - 1.0).abs() < 1e-4, "{acc}");
    }

    #[test]
    fn composed_profile() {
        let grid = Grid::new_1d(10_001, 0.0, 1.0).unwrap();
        let pr = profile_quadrature(&quad(0.5), 2.0, 1e-3, 1e-9).unwrap();
        let u = compose_full_profile(&pr, 0.3, &grid).unwrap();
        let v = u.values();
        assert!((v[0] - 0.3).abs() < 1e-15);
        assert!((v[1000] - (0.3 - 0.1)).abs() < 1e-12);
        assert!((v[2990] - 1e-3).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(v[10_000], 0.0);
        let short = Grid::new_1d(11, 0.0, 0.2).unwrap();
        assert!(compose_full_profile(&pr, 0.3, &short).is_err());
        assert!(compose_full_profile(&pr, 5e-4, &grid).is_err());
    }
}
