//! Damped Newton solver for the regularized p(x)-Laplacian with a singular
//! reaction term, and the discrete energy whose gradient is the residual.

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{ensure_same_grid, gradient, Grid, ScalarField, VectorField};
use crate::linalg::SparsePattern;
use crate::reaction::ReactionProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NONE: usize = usize::MAX;
const HESSIAN_FLOOR: f64 = 1e-16;
const MAX_DELTA_BUMPS: usize = 6;
const SHORT_STEP: f64 = 1.0 / 16.0;

/// One instance of the perturbed Dirichlet problem
/// `div(|grad u|^(p-2) grad u) = beta_eps(u) + f`, `u = g` on the boundary.
#[derive(Clone, Debug)]
pub struct DirichletProblem {
    grid: Grid,
    p: ExponentField,
    f: ScalarField,
    reaction: ReactionProfile,
    eps: f64,
    boundary: ScalarField,
}

impl DirichletProblem {
    /// `boundary` supplies the Dirichlet data on boundary nodes; its interior
    /// values are ignored.
    pub fn new(
        p: ExponentField,
        f: ScalarField,
        reaction: ReactionProfile,
        eps: f64,
        boundary: ScalarField,
    ) -> Result<Self> {
        let grid = *p.grid();
        ensure_same_grid(&grid, f.grid())?;
        ensure_same_grid(&grid, boundary.grid())?;
        check_eps(eps)?;
        for n in grid.boundary_nodes() {
            let g = boundary.values()[n];
            if g < 0.0 {
                return Err(Error::OutOfRange {
                    name: "boundary",
                    reason: format!("Dirichlet data must be nonnegative, got {g} at node {n}"),
                });
            }
        }
        Ok(DirichletProblem {
            grid,
            p,
            f,
            reaction,
            eps,
            boundary,
        })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let mut out = self.clone();
        out.eps = eps;
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn exponent(&self) -> &ExponentField {
        &self.p
    }

    pub fn forcing(&self) -> &ScalarField {
        &self.f
    }

    pub fn reaction(&self) -> &ReactionProfile {
        &self.reaction
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn boundary(&self) -> &ScalarField {
        &self.boundary
    }

    /// Copy of `u` with the boundary nodes overwritten by the Dirichlet data.
    pub fn with_boundary(&self, u: &ScalarField) -> Result<ScalarField> {
        ensure_same_grid(&self.grid, u.grid())?;
        let mut out = u.clone();
        for n in self.grid.boundary_nodes() {
            out.values_mut()[n] = self.boundary.values()[n];
        }
        Ok(out)
    }

    fn check_boundary(&self, u: &ScalarField) -> Result<()> {
        ensure_same_grid(&self.grid, u.grid())?;
        let scale = self
            .boundary
            .values()
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        for n in self.grid.boundary_nodes() {
            if (u.values()[n] - self.boundary.values()[n]).abs() > 1e-12 * scale {
                return Err(Error::BoundaryMismatch { node: n });
            }
        }
        Ok(())
    }
}

/// One continuation stage. `delta: None` selects the default regularization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub eps: f64,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Flux regularization at the target stage; `None` means `max(1e-8, h)`.
    pub delta: Option<f64>,
    /// Bound on the weighted residual norm `sqrt(sum vol * r_i^2)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub backtrack_factor: f64,
    pub min_step: f64,
    pub armijo: f64,
    /// Stages run before the target, strictly decreasing in `eps`.
    pub schedule: Vec<Stage>,
    /// How many times a failed stage may be split by an intermediate `eps`.
    pub max_refinements: usize,
    pub project_nonnegative: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            delta: None,
            tolerance: 1e-8,
            max_iterations: 100,
            backtrack_factor: 0.5,
            min_step: 2f64.powi(-30),
            armijo: 1e-4,
            schedule: Vec::new(),
            max_refinements: 4,
            project_nonnegative: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::OutOfRange {
                name,
                reason: reason.into(),
            })
        };
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance", "must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations", "must be at least 1");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor", "must lie in (0, 1)");
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return bad("min_step", "must lie in (0, 1]");
        }
        if !(self.armijo >= 0.0 && self.armijo < 1.0) {
            return bad("armijo", "must lie in [0, 1)");
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0 && d.is_finite()) {
                return bad("delta", "must be nonnegative");
            }
        }
        for st in &self.schedule {
            check_eps(st.eps)?;
            if let Some(d) = st.delta {
                if !(d >= 0.0 && d.is_finite()) {
                    return bad("schedule", "stage delta must be nonnegative");
                }
            }
        }
        if self.schedule.windows(2).any(|w| w[1].eps >= w[0].eps) {
            return bad("schedule", "eps must be strictly decreasing");
        }
        Ok(())
    }

    fn default_delta(&self, grid: &Grid) -> f64 {
        self.delta.unwrap_or_else(|| grid.h().max(1e-8))
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: ScalarField,
    pub eps: f64,
    /// Regularization actually used, including any increase after a
    /// singular Jacobian.
    pub delta: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub energy: f64,
    pub converged: bool,
    pub nonnegative: bool,
    pub delta_bumps: usize,
    pub inserted_stages: usize,
}

/// `(delta^2 + |g|^2)^((p-2)/2) g`, with the value 0 where the base vanishes.
pub fn flux_vector(g: [f64; 2], p: f64, delta: f64) -> [f64; 2] {
    let base = delta * delta + g[0] * g[0] + g[1] * g[1];
    if base == 0.0 {
        return [0.0; 2];
    }
    let c = base.powf(0.5 * (p - 2.0));
    [c * g[0], c * g[1]]
}

fn flux_hessian(g: [f64; 2], p: f64, delta: f64) -> [[f64; 2]; 2] {
    let base = (delta * delta + g[0] * g[0] + g[1] * g[1]).max(HESSIAN_FLOOR);
    let c = base.powf(0.5 * (p - 2.0));
    let k = (p - 2.0) / base;
    [
        [c * (1.0 + k * g[0] * g[0]), c * k * g[0] * g[1]],
        [c * k * g[1] * g[0], c * (1.0 + k * g[1] * g[1])],
    ]
}

fn energy_density(g: [f64; 2], p: f64, delta: f64) -> f64 {
    let base = delta * delta + g[0] * g[0] + g[1] * g[1];
    (base.powf(0.5 * p) - delta.powf(p)) / p
}

/// Regularized flux at every gradient sample, using the edge-averaged exponent.
pub fn flux(u: &ScalarField, p: &ExponentField, delta: f64) -> Result<VectorField> {
    ensure_same_grid(u.grid(), p.grid())?;
    check_delta(delta)?;
    let grid = *u.grid();
    let d = grid.dim();
    let grad = gradient(u);
    let ps = p.sample_values();
    let mut out = VectorField::zeros(grid);
    for (s, &ps) in ps.iter().enumerate() {
        let gs = grad.get(s);
        let g = [gs[0], if d == 2 { gs[1] } else { 0.0 }];
        let a = flux_vector(g, ps, delta);
        out.get_mut(s).copy_from_slice(&a[..d]);
    }
    Ok(out)
}

/// `div(flux(u)) - beta_eps(u) - f` at interior nodes, zero on the boundary.
pub fn residual(prob: &DirichletProblem, u: &ScalarField, delta: f64) -> Result<ScalarField> {
    prob.check_boundary(u)?;
    check_delta(delta)?;
    let op = Operator::new(prob, prob.p.sample_values(), true);
    ScalarField::new(prob.grid, op.residual(u.values(), prob.eps, delta))
}

/// Discrete energy
/// `sum_s w [(delta^2 + |g_s|^2)^(p/2) - delta^p] / p + sum_i w_i (B_eps(u_i) + f_i u_i)`.
/// Its derivative in an interior value `u_i` is `-vol * residual_i`.
pub fn energy(prob: &DirichletProblem, u: &ScalarField, delta: f64) -> Result<f64> {
    prob.check_boundary(u)?;
    check_delta(delta)?;
    let op = Operator::new(prob, prob.p.sample_values(), true);
    Ok(op.energy(u.values(), prob.eps, delta))
}

/// Weighted residual norm `sqrt(sum_i vol * r_i^2)` over interior nodes.
pub fn residual_norm(r: &ScalarField) -> f64 {
    let grid = r.grid();
    let vol = grid.cell_volume();
    grid.interior_nodes()
        .map(|i| vol * r.values()[i].powi(2))
        .sum::<f64>()
        .sqrt()
}

struct Operator<'a> {
    prob: &'a DirichletProblem,
    p_samples: Vec<f64>,
    reaction: bool,
}

impl<'a> Operator<'a> {
    fn new(prob: &'a DirichletProblem, p_samples: Vec<f64>, reaction: bool) -> Self {
        Operator {
            prob,
            p_samples,
            reaction,
        }
    }

    fn sample_gradient(&self, u: &[f64], s: usize) -> [f64; 2] {
        let st = self.prob.grid.stencil(s);
        let mut g = [0.0; 2];
        for (n, c) in st.iter() {
            g[0] += c[0] * u[n];
            g[1] += c[1] * u[n];
        }
        g
    }

    fn residual(&self, u: &[f64], eps: f64, delta: f64) -> Vec<f64> {
        let grid = &self.prob.grid;
        let w = grid.sample_weight();
        let mut acc = vec![0.0; grid.num_nodes()];
        for s in 0..grid.num_samples() {
            let a = flux_vector(self.sample_gradient(u, s), self.p_samples[s], delta);
            for (n, c) in grid.stencil(s).iter() {
                acc[n] -= w * (c[0] * a[0] + c[1] * a[1]);
            }
        }
        let vol = grid.cell_volume();
        let f = self.prob.f.values();
        for (i, v) in acc.iter_mut().enumerate() {
            if grid.is_boundary(i) {
                *v = 0.0;
                continue;
            }
            *v = *v / vol - f[i];
            if self.reaction {
                *v -= self.prob.reaction.beta_eps_unchecked(u[i], eps);
            }
        }
        acc
    }

    fn energy(&self, u: &[f64], eps: f64, delta: f64) -> f64 {
        let grid = &self.prob.grid;
        let w = grid.sample_weight();
        let mut e = 0.0;
        for s in 0..grid.num_samples() {
            e += w * energy_density(self.sample_gradient(u, s), self.p_samples[s], delta);
        }
        let f = self.prob.f.values();
        for (i, &ui) in u.iter().enumerate() {
            let mut v = f[i] * ui;
            if self.reaction {
                v += self.prob.reaction.big_b_eps_unchecked(ui, eps);
            }
            e += grid.node_weight(i) * v;
        }
        e
    }
}

/// Sparsity layout over the interior unknowns: one block per sample followed
/// by one diagonal slot per unknown.
struct System {
    unknown: Vec<usize>,
    interior: Vec<usize>,
    pattern: SparsePattern,
    nnz: usize,
}

impl System {
    fn new(grid: &Grid) -> Result<Self> {
        let interior: Vec<usize> = grid.interior_nodes().collect();
        let mut unknown = vec![NONE; grid.num_nodes()];
        for (k, &n) in interior.iter().enumerate() {
            unknown[n] = k;
        }
        let mut entries = Vec::new();
        for s in 0..grid.num_samples() {
            let st = grid.stencil(s);
            for (a, _) in st.iter() {
                for (b, _) in st.iter() {
                    if unknown[a] != NONE && unknown[b] != NONE {
                        entries.push((unknown[a], unknown[b]));
                    }
                }
            }
        }
        for k in 0..interior.len() {
            entries.push((k, k));
        }
        let pattern = SparsePattern::new(interior.len(), &entries)?;
        Ok(System {
            unknown,
            interior,
            pattern,
            nnz: entries.len(),
        })
    }

    /// Values of `K + vol * diag(beta')`, with `beta'` clipped at 0 when
    /// `convex` is set.
    fn jacobian(&self, op: &Operator, u: &[f64], eps: f64, delta: f64, convex: bool) -> Vec<f64> {
        let grid = &op.prob.grid;
        let w = grid.sample_weight();
        let mut vals = Vec::with_capacity(self.nnz);
        for s in 0..grid.num_samples() {
            let st = grid.stencil(s);
            let h = flux_hessian(op.sample_gradient(u, s), op.p_samples[s], delta);
            for (a, ca) in st.iter() {
                if self.unknown[a] == NONE {
                    continue;
                }
                let ha = [
                    h[0][0] * ca[0] + h[0][1] * ca[1],
                    h[1][0] * ca[0] + h[1][1] * ca[1],
                ];
                for (b, cb) in st.iter() {
                    if self.unknown[b] != NONE {
                        vals.push(w * (ha[0] * cb[0] + ha[1] * cb[1]));
                    }
                }
            }
        }
        let vol = grid.cell_volume();
        for &n in &self.interior {
            let mut d = 0.0;
            if op.reaction {
                d = op.prob.reaction.beta_eps_prime_unchecked(u[n], eps);
                if convex {
                    d = d.max(0.0);
                }
            }
            vals.push(vol * d);
        }
        vals
    }
}

struct NewtonOutcome {
    converged: bool,
    iterations: usize,
    norm: f64,
}

struct Solver<'a> {
    prob: &'a DirichletProblem,
    cfg: &'a SolverConfig,
    system: System,
    p_samples: Vec<f64>,
    delta_bumps: usize,
    inserted: usize,
}

impl<'a> Solver<'a> {
    fn new(prob: &'a DirichletProblem, cfg: &'a SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Solver {
            prob,
            cfg,
            system: System::new(&prob.grid)?,
            p_samples: prob.p.sample_values(),
            delta_bumps: 0,
            inserted: 0,
        })
    }

    fn norm(&self, r: &[f64]) -> f64 {
        let vol = self.prob.grid.cell_volume();
        self.system
            .interior
            .iter()
            .map(|&i| vol * r[i] * r[i])
            .sum::<f64>()
            .sqrt()
    }

    fn project(&self, u: &mut [f64]) {
        if self.cfg.project_nonnegative {
            for &i in &self.system.interior {
                u[i] = u[i].max(0.0);
            }
        }
    }

    fn trial(&self, u: &[f64], du: &[f64], t: f64) -> Vec<f64> {
        let mut out = u.to_vec();
        for (k, &n) in self.system.interior.iter().enumerate() {
            out[n] += t * du[k];
        }
        self.project(&mut out);
        out
    }

    fn newton(
        &mut self,
        op: &Operator,
        u: &mut Vec<f64>,
        eps: f64,
        delta: &mut f64,
    ) -> NewtonOutcome {
        let cfg = self.cfg;
        let vol = self.prob.grid.cell_volume();
        let mut r = op.residual(u, eps, *delta);
        let mut norm = self.norm(&r);
        let mut iterations = 0;
        while iterations < cfg.max_iterations {
            if norm <= cfg.tolerance {
                break;
            }
            iterations += 1;
            let rhs: Vec<f64> = self.system.interior.iter().map(|&i| vol * r[i]).collect();
            let vals = self.system.jacobian(op, u, eps, *delta, false);
            let du = match self.system.pattern.solve(&vals, &rhs) {
                Ok(x) => x,
                Err(_) if self.delta_bumps < MAX_DELTA_BUMPS => {
                    *delta = (*delta * 10.0).max(1e-8);
                    self.delta_bumps += 1;
                    r = op.residual(u, eps, *delta);
                    norm = self.norm(&r);
                    continue;
                }
                Err(_) => break,
            };
            let mut t = 1.0;
            let mut accepted = None;
            while t >= cfg.min_step {
                let cand = self.trial(u, &du, t);
                let rc = op.residual(&cand, eps, *delta);
                let nc = self.norm(&rc);
                if nc <= (1.0 - cfg.armijo * t) * norm {
                    accepted = Some((cand, rc, nc));
                    break;
                }
                t *= cfg.backtrack_factor;
            }
            if accepted.is_none() || t < SHORT_STEP {
                if let Some((step, te)) = self.energy_step(op, u, &du, &rhs, eps, *delta) {
                    if accepted.is_none() || te > t {
                        accepted = Some(step);
                    }
                }
            }
            match accepted {
                Some((cand, rc, nc)) => {
                    *u = cand;
                    r = rc;
                    norm = nc;
                }
                None => break,
            }
        }
        NewtonOutcome {
            converged: norm <= cfg.tolerance,
            iterations,
            norm,
        }
    }

    /// Armijo step on the energy along the Newton direction, or along the
    /// convexified Newton direction when the former is not a descent direction.
    #[allow(clippy::type_complexity)]
    fn energy_step(
        &self,
        op: &Operator,
        u: &[f64],
        du: &[f64],
        rhs: &[f64],
        eps: f64,
        delta: f64,
    ) -> Option<((Vec<f64>, Vec<f64>, f64), f64)> {
        let slope_of = |d: &[f64]| -rhs.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
        let mut slope = slope_of(du);
        let convex;
        let d = if slope < 0.0 {
            du
        } else {
            let vals = self.system.jacobian(op, u, eps, delta, true);
            convex = self.system.pattern.solve(&vals, rhs).ok()?;
            slope = slope_of(&convex);
            if slope >= 0.0 {
                return None;
            }
            &convex
        };
        let e0 = op.energy(u, eps, delta);
        let mut t = 1.0;
        while t >= self.cfg.min_step {
            let cand = self.trial(u, d, t);
            if op.energy(&cand, eps, delta) <= e0 + self.cfg.armijo * t * slope {
                let rc = op.residual(&cand, eps, delta);
                let nc = self.norm(&rc);
                return Some(((cand, rc, nc), t));
            }
            t *= self.cfg.backtrack_factor;
        }
        None
    }

    /// Linear `p = 2` solve followed by the reaction-free `p(x)` problem.
    fn initial_guess(&mut self) -> Vec<f64> {
        let mut u = self.prob.boundary.values().to_vec();
        for &i in &self.system.interior {
            u[i] = 0.0;
        }
        let linear = Operator::new(self.prob, vec![2.0; self.p_samples.len()], false);
        let mut d0 = 0.0;
        self.newton(&linear, &mut u, self.prob.eps, &mut d0);
        if self.p_samples.iter().any(|&p| p != 2.0) {
            let frozen = Operator::new(self.prob, self.p_samples.clone(), false);
            let mut d = self.cfg.default_delta(&self.prob.grid);
            self.newton(&frozen, &mut u, self.prob.eps, &mut d);
        }
        u
    }

    /// Solves at `eps` from `u0`, splitting the step from `prev` by an
    /// intermediate value when Newton fails.
    fn stage(
        &mut self,
        u0: &[f64],
        prev: Option<f64>,
        eps: f64,
        delta: f64,
        depth: usize,
    ) -> (Vec<f64>, f64, NewtonOutcome) {
        let p_samples = std::mem::take(&mut self.p_samples);
        let op = Operator::new(self.prob, p_samples, true);
        let mut u = u0.to_vec();
        let mut d = delta;
        let out = self.newton(&op, &mut u, eps, &mut d);
        self.p_samples = op.p_samples;
        if out.converged || depth >= self.cfg.max_refinements {
            return (u, d, out);
        }
        let mid = match prev {
            Some(p) => (p * eps).sqrt(),
            None => 2.0 * eps,
        };
        self.inserted += 1;
        let (um, dm, om) = self.stage(u0, prev, mid, delta, depth + 1);
        if !om.converged {
            return if om.norm < out.norm {
                (um, dm, om)
            } else {
                (u, d, out)
            };
        }
        let (u2, d2, o2) = self.stage(&um, Some(mid), eps, delta, depth + 1);
        if o2.converged || o2.norm < out.norm {
            (u2, d2, o2)
        } else {
            (u, d, out)
        }
    }

    fn finish(&self, u: Vec<f64>, eps: f64, delta: f64, out: NewtonOutcome) -> Result<SolveResult> {
        let prob = self.prob.with_eps(eps)?;
        let op = Operator::new(&prob, self.p_samples.clone(), true);
        let energy = op.energy(&u, eps, delta);
        let tol = self.cfg.tolerance;
        let u = ScalarField::new(self.prob.grid, u)?;
        Ok(SolveResult {
            nonnegative: u.min() >= -tol,
            u,
            eps,
            delta,
            residual_norm: out.norm,
            iterations: out.iterations,
            energy,
            converged: out.converged,
            delta_bumps: self.delta_bumps,
            inserted_stages: self.inserted,
        })
    }

    fn run(&mut self, start: Option<&ScalarField>, stages: &[Stage]) -> Result<Vec<SolveResult>> {
        let default_delta = self.cfg.default_delta(&self.prob.grid);
        let mut u = match start {
            Some(s) => self.prob.with_boundary(s)?.into_values(),
            None => self.initial_guess(),
        };
        let mut prev: Option<f64> = None;
        let mut results = Vec::with_capacity(stages.len());
        for st in stages {
            self.delta_bumps = 0;
            self.inserted = 0;
            let delta = st.delta.unwrap_or(default_delta);
            let (un, d, out) = self.stage(&u, prev, st.eps, delta, 0);
            u = un.clone();
            prev = Some(st.eps);
            results.push(self.finish(un, st.eps, d, out)?);
        }
        Ok(results)
    }
}

fn stages_to(prob: &DirichletProblem, cfg: &SolverConfig) -> Result<Vec<Stage>> {
    cfg.validate()?;
    let mut stages: Vec<Stage> = Vec::new();
    for st in &cfg.schedule {
        if st.eps < prob.eps {
            return Err(Error::OutOfRange {
                name: "schedule",
                reason: format!("stage eps {} lies below the target {}", st.eps, prob.eps),
            });
        }
        if st.eps > prob.eps {
            stages.push(*st);
        }
    }
    let target = cfg
        .schedule
        .iter()
        .find(|s| s.eps == prob.eps)
        .copied()
        .unwrap_or(Stage {
            eps: prob.eps,
            delta: cfg.delta,
        });
    stages.push(target);
    Ok(stages)
}

/// Runs the configured continuation schedule down to the problem's `eps`.
/// Non-convergence is reported through the returned flags.
pub fn solve(prob: &DirichletProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    let stages = stages_to(prob, cfg)?;
    let mut solver = Solver::new(prob, cfg)?;
    let mut all = solver.run(None, &stages)?;
    Ok(all.pop().expect("at least one stage"))
}

/// Like [`solve`] but starting Newton from `start` at the target `eps` only.
pub fn solve_from(
    prob: &DirichletProblem,
    cfg: &SolverConfig,
    start: &ScalarField,
) -> Result<SolveResult> {
    let mut solver = Solver::new(prob, cfg)?;
    let stage = Stage {
        eps: prob.eps,
        delta: cfg.delta,
    };
    let mut all = solver.run(Some(start), &[stage])?;
    Ok(all.pop().expect("one stage"))
}

/// One warm-started solve per entry of the strictly decreasing `eps_list`.
/// Schedule stages above the first entry are run first and not reported.
pub fn continuation_sweep(
    prob: &DirichletProblem,
    eps_list: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<SolveResult>> {
    if eps_list.is_empty() {
        return Err(Error::OutOfRange {
            name: "eps_list",
            reason: "must not be empty".into(),
        });
    }
    for &e in eps_list {
        check_eps(e)?;
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::OutOfRange {
            name: "eps_list",
            reason: "must be strictly decreasing".into(),
        });
    }
    cfg.validate()?;
    let first = prob.with_eps(eps_list[0])?;
    let mut stages: Vec<Stage> = cfg
        .schedule
        .iter()
        .filter(|s| s.eps > eps_list[0])
        .copied()
        .collect();
    let lead = stages.len();
    for &e in eps_list {
        let delta = cfg
            .schedule
            .iter()
            .find(|s| s.eps == e)
            .and_then(|s| s.delta)
            .or(cfg.delta);
        stages.push(Stage { eps: e, delta });
    }
    let mut solver = Solver::new(&first, cfg)?;
    let all = solver.run(None, &stages)?;
    Ok(all.into_iter().skip(lead).collect())
}

/// True when `lower <= upper + tol` at every node.
pub fn comparison_check(lower: &ScalarField, upper: &ScalarField, tol: f64) -> Result<bool> {
    ensure_same_grid(lower.grid(), upper.grid())?;
    Ok(lower
        .values()
        .iter()
        .zip(upper.values())
        .all(|(a, b)| *a <= *b + tol))
}

/// [`comparison_check`] between two converged solutions.
pub fn comparison_check_solutions(u: &SolveResult, v: &SolveResult, tol: f64) -> Result<bool> {
    if !u.converged || !v.converged {
        return Err(Error::Precondition(
            "comparison requires converged solutions".into(),
        ));
    }
    comparison_check(&u.u, &v.u, tol)
}

/// Largest relative mismatch between central differences of [`energy`] and
/// the residual along random interior directions, measured against
/// `|grad E| |d|`.
pub fn energy_gradient_check(
    prob: &DirichletProblem,
    u: &ScalarField,
    delta: f64,
    directions: usize,
    seed: u64,
) -> Result<f64> {
    let grid = *prob.grid();
    let r = residual(prob, u, delta)?;
    let vol = grid.cell_volume();
    let gn = r
        .values()
        .iter()
        .map(|v| (vol * v).powi(2))
        .sum::<f64>()
        .sqrt();
    if gn == 0.0 {
        return Err(Error::Degenerate("residual vanishes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let dir: Vec<f64> = (0..grid.num_nodes())
            .map(|i| {
                if grid.is_boundary(i) {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let shift = |t: f64| {
            let v = u
                .values()
                .iter()
                .zip(&dir)
                .map(|(a, d)| a + t * d)
                .collect();
            ScalarField::new(grid, v)
        };
        let fd = (energy(prob, &shift(step)?, delta)? - energy(prob, &shift(-step)?, delta)?)
            / (2.0 * step);
        let an = -vol * r.values().iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
        let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max((fd - an).abs() / (gn * dn));
    }
    Ok(worst)
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

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "delta",
            reason: format!("must be nonnegative, got {delta}"),
        })
    }
}
