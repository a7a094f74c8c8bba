//! The reaction term: a Lipschitz profile supported in [0, 1] with total mass
//! `M`, its ε-rescalings and the limiting gradient jump.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    /// `6 M s (1 - s)`.
    Quadratic,
    /// Piecewise linear through `(s[k], v[k])`, already scaled to the mass.
    /// `cum[k]` is the integral over `[0, s[k]]`.
    Table {
        s: Vec<f64>,
        v: Vec<f64>,
        cum: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionProfile {
    shape: Shape,
    mass: f64,
    lipschitz: f64,
    sup: f64,
}

impl ReactionProfile {
    /// The default profile `beta(s) = 6 M s (1 - s)` on (0, 1).
    pub fn quadratic(mass: f64) -> Result<Self> {
        check_mass(mass)?;
        Ok(ReactionProfile {
            shape: Shape::Quadratic,
            mass,
            lipschitz: 6.0 * mass,
            sup: 1.5 * mass,
        })
    }

    /// A sampled profile with linear interpolation between `points`
    /// (`(s, beta(s))` pairs, strictly increasing in `s`). The table is
    /// extended by zeros at `s = 0` and `s = 1` when those end points are
    /// missing and is rescaled so that its integral equals `mass`.
    pub fn table(points: &[(f64, f64)], mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        if pts.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidReaction("non-finite table entry".into()));
        }
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidReaction(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        if pts.first().is_none_or(|p| p.0 > 0.0) {
            pts.insert(0, (0.0, 0.0));
        }
        if pts.last().is_none_or(|p| p.0 < 1.0) {
            pts.push((1.0, 0.0));
        }
        if pts[0].0 < 0.0 || pts[pts.len() - 1].0 > 1.0 {
            return Err(Error::InvalidReaction(
                "table abscissae must lie in [0, 1]".into(),
            ));
        }
        if pts[0].1 != 0.0 || pts[pts.len() - 1].1 != 0.0 {
            return Err(Error::InvalidReaction(
                "profile must vanish at s = 0 and s = 1".into(),
            ));
        }
        if pts.len() < 3 {
            return Err(Error::InvalidReaction(
                "table needs an interior point".into(),
            ));
        }
        let interior = &pts[1..pts.len() - 1];
        if interior.iter().any(|&(_, v)| v <= 0.0) {
            return Err(Error::InvalidReaction(
                "profile must be positive at interior table points".into(),
            ));
        }
        let raw: f64 = pts
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        let scale = mass / raw;
        let s: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let v: Vec<f64> = pts.iter().map(|p| p.1 * scale).collect();
        let mut cum = vec![0.0; s.len()];
        for k in 1..s.len() {
            cum[k] = cum[k - 1] + 0.5 * (v[k - 1] + v[k]) * (s[k] - s[k - 1]);
        }
        let lipschitz = s
            .windows(2)
            .zip(v.windows(2))
            .map(|(ds, dv)| ((dv[1] - dv[0]) / (ds[1] - ds[0])).abs())
            .fold(0.0, f64::max);
        let sup = v.iter().copied().fold(0.0, f64::max);
        Ok(ReactionProfile {
            shape: Shape::Table { s, v, cum },
            mass,
            lipschitz,
            sup,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    /// The unscaled profile `beta(t)`.
    pub fn beta(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Quadratic => 6.0 * self.mass * t * (1.0 - t),
            Shape::Table { s, v, .. } => {
                let k = segment(s, t);
                let w = (t - s[k]) / (s[k + 1] - s[k]);
                v[k] + w * (v[k + 1] - v[k])
            }
        }
    }

    /// Derivative of `beta`; at the kinks `t = 0` and table nodes the right
    /// derivative is returned, and 0 for `t >= 1`.
    pub fn beta_prime(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match &self.shape {
            Shape::Quadratic => 6.0 * self.mass * (1.0 - 2.0 * t),
            Shape::Table { s, v, .. } => {
                let k = segment(s, t);
                (v[k + 1] - v[k]) / (s[k + 1] - s[k])
            }
        }
    }

    /// Primitive `B(t) = int_0^t beta`.
    pub fn big_b(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return self.mass;
        }
        match &self.shape {
            Shape::Quadratic => self.mass * t * t * (3.0 - 2.0 * t),
            Shape::Table { s, v, cum } => {
                let k = segment(s, t);
                let slope = (v[k + 1] - v[k]) / (s[k + 1] - s[k]);
                let d = t - s[k];
                cum[k] + v[k] * d + 0.5 * slope * d * d
            }
        }
    }

    /// `beta_eps(s) = beta(s / eps) / eps`.
    pub fn beta_eps(&self, s: f64, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        Ok(self.beta_eps_unchecked(s, eps))
    }

    /// `B_eps(s) = int_0^s beta_eps = B(s / eps)`.
    pub fn big_b_eps(&self, s: f64, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        Ok(self.big_b(s / eps))
    }

    pub(crate) fn beta_eps_unchecked(&self, s: f64, eps: f64) -> f64 {
        self.beta(s / eps) / eps
    }

    pub(crate) fn beta_eps_prime_unchecked(&self, s: f64, eps: f64) -> f64 {
        self.beta_prime(s / eps) / (eps * eps)
    }

    pub(crate) fn big_b_eps_unchecked(&self, s: f64, eps: f64) -> f64 {
        self.big_b(s / eps)
    }
}

fn segment(s: &[f64], t: f64) -> usize {
    let k = s.partition_point(|&x| x <= t);
    k.saturating_sub(1).min(s.len() - 2)
}

fn check_mass(mass: f64) -> Result<()> {
    if mass.is_finite() && mass > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "mass",
            reason: format!("must be positive and finite, got {mass}"),
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "eps",
            reason: format!("must be positive, got {eps}"),
        })
    }
}

/// Limiting free-boundary gradient `((p / (p - 1)) M)^(1 / p)`.
pub fn lambda_star(p: f64, mass: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            reason: format!("must exceed 1, got {p}"),
        });
    }
    check_mass(mass)?;
    Ok((p / (p - 1.0) * mass).powf(1.0 / p))
}
