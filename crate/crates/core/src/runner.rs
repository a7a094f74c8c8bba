//! Scenario execution: continuation sweep, per-stage diagnostics,
//! verification suite and output files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::analysis::{
    bump_field, chi_field, chi_transition_fraction, extract_free_boundary, harnack_quotient,
    identity_4_2_check, lipschitz_monitor, max_gradient_interior, nondegeneracy_report,
    reaction_concentration, sample_admissible_balls, slope_report, FreeBoundaryReport,
};
use crate::barriers::{annulus_comparison, barrier_subsolution_check, BarrierSpec};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{Grid, ScalarField};
use crate::oracle::{compose_full_profile, profile_quadrature};
use crate::plot::{heat_map, profile_overlay, slope_convergence};
use crate::reaction::lambda_star;
use crate::report::{write_checks, write_convergence_table, Check, ConvergenceRow};
use crate::scenario::{ExponentSpec, ForcingSpec, ScenarioConfig, VerifyToggles};
use crate::solver::{continuation_sweep, DirichletProblem, SolveResult};

const BARRIER_SAMPLES: usize = 1000;
const COMPARISON_TOL: f64 = 1e-8;

/// A solved stage with its diagnostics.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub result: SolveResult,
    /// Free boundary at level `eps` with slopes filled in where the probes fit.
    pub free_boundary: FreeBoundaryReport,
    pub row: ConvergenceRow,
    pub harnack_quotients: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub config: ScenarioConfig,
    pub problem: DirichletProblem,
    pub stages: Vec<StageReport>,
}

impl SweepOutcome {
    pub fn all_converged(&self) -> bool {
        self.stages.iter().all(|s| s.result.converged)
    }

    pub fn last(&self) -> &StageReport {
        self.stages.last().expect("a sweep has at least one stage")
    }
}

/// Runs every stage of the schedule, or only the last one when
/// `final_only` (earlier entries then act as unreported warm-up stages).
pub fn run_sweep(cfg: &ScenarioConfig, final_only: bool) -> Result<SweepOutcome> {
    cfg.validate()?;
    let prob = cfg.build_problem()?;
    let mut solver_cfg = cfg.solver_config();
    let eps_list: Vec<f64> = if final_only {
        let (last, lead) = cfg.eps_schedule.split_last().expect("validated");
        solver_cfg.schedule.extend(
            lead.iter()
                .map(|&eps| crate::solver::Stage { eps, delta: None }),
        );
        vec![*last]
    } else {
        cfg.eps_schedule.clone()
    };
    let results = continuation_sweep(&prob, &eps_list, &solver_cfg)?;
    let stages = results
        .into_iter()
        .map(|r| analyze_stage(cfg, &prob, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome {
        config: cfg.clone(),
        problem: prob,
        stages,
    })
}

fn retain_inside(fb: &mut FreeBoundaryReport, grid: &Grid, margin: f64) {
    let d = grid.dim();
    fb.points
        .retain(|p| grid.distance_to_boundary(&p.position[..d]) >= margin);
    fb.segments.retain(|s| {
        s.iter()
            .all(|x| grid.distance_to_boundary(&x[..d]) >= margin)
    });
}

/// Free-boundary slopes, Lipschitz monitor and the enabled diagnostics for
/// one solved stage.
pub fn analyze_stage(
    cfg: &ScenarioConfig,
    prob: &DirichletProblem,
    result: SolveResult,
) -> Result<StageReport> {
    let a = &cfg.analysis;
    let grid = *prob.grid();
    let h = grid.h();
    let eps = result.eps;
    let u = &result.u;
    let mass = prob.reaction().mass();

    let mut fb = extract_free_boundary(u, eps)?;
    retain_inside(&mut fb, &grid, (2.0 * a.slope_probe_h + 1.0) * h);
    let fb = slope_report(u, prob.exponent(), mass, &fb, a.slope_probe_h)?;

    let mut row = ConvergenceRow {
        eps,
        h,
        max_grad_interior: max_gradient_interior(u, a.lipschitz_margin)?,
        fb_mean_slope: fb.mean_slope,
        fb_max_rel_err: fb.max_rel_error,
        ..Default::default()
    };
    let v = &cfg.verify;
    if v.concentration {
        let width = a.concentration_width_eps * eps;
        let mut strip = fb.clone();
        retain_inside(&mut strip, &grid, width);
        row.reaction_concentration =
            reaction_concentration(u, eps, prob.reaction(), &strip, width)?;
    }
    if v.chi {
        let chi = chi_field(u, eps, prob.reaction())?;
        row.chi_transition_fraction = Some(chi_transition_fraction(&chi, mass));
    }
    let mut harnack_quotients = Vec::new();
    if v.harnack {
        let radii = (a.harnack_radii_h[0] * h, a.harnack_radii_h[1] * h);
        if let Ok(balls) = sample_admissible_balls(u, a.harnack_balls, radii, eps, a.seed) {
            for (c, r) in balls {
                let s = harnack_quotient(u, prob.forcing(), prob.exponent(), &c[..grid.dim()], r)?;
                harnack_quotients.push(s.quotient);
            }
            row.harnack_max_quotient = harnack_quotients.iter().cloned().reduce(f64::max);
        }
    }
    if v.identity42 {
        if let Some(pt) = fb.points.first() {
            let d = grid.dim();
            let psi = bump_field(grid, &pt.position[..d], a.identity_width)?;
            if let Ok(c) = identity_4_2_check(
                u,
                eps,
                prob.exponent(),
                prob.forcing(),
                prob.reaction(),
                &psi,
            ) {
                row.identity42_gap = Some(c.gap);
            }
        }
    }
    Ok(StageReport {
        result,
        free_boundary: fb,
        row,
        harnack_quotients,
    })
}

/// Center of (approximately) the largest ball touching `{u <= level}` that
/// stays inside the domain, searched over a coarse subset of the nodes.
pub fn largest_inner_ball(u: &ScalarField, level: f64) -> Option<([f64; 2], f64)> {
    let grid = u.grid();
    let d = grid.dim();
    let v = u.values();
    let low: Vec<[f64; 2]> = (0..grid.num_nodes())
        .filter(|&n| v[n] <= level)
        .map(|n| grid.node_coords(n))
        .collect();
    if low.is_empty() {
        return None;
    }
    let stride = (grid.num_nodes() / 400).max(1);
    let mut best: Option<([f64; 2], f64)> = None;
    for n in (0..grid.num_nodes()).step_by(stride) {
        if v[n] <= level {
            continue;
        }
        let x = grid.node_coords(n);
        let dz = low
            .iter()
            .map(|z| (0..d).map(|k| (z[k] - x[k]).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        if dz > grid.distance_to_boundary(&x[..d]) {
            continue;
        }
        if best.is_none_or(|b| dz > b.1) {
            best = Some((x, dz));
        }
    }
    best
}

fn mean_lambda_power(fb: &FreeBoundaryReport, p: &ExponentField, mass: f64) -> Result<f64> {
    let d = p.grid().dim();
    let mut acc = 0.0;
    for pt in &fb.points {
        let pv = p.at(&pt.position[..d])?;
        acc += lambda_star(pv, mass)?.powf(pv - 1.0);
    }
    Ok(acc / fb.points.len() as f64)
}

/// The verification suite on a finished sweep, restricted to `toggles`.
/// The slope and Lipschitz checks always run.
pub fn verify(outcome: &SweepOutcome, toggles: &VerifyToggles) -> Result<Vec<Check>> {
    let cfg = &outcome.config;
    let a = &cfg.analysis;
    let prob = &outcome.problem;
    let grid = *prob.grid();
    let d = grid.dim();
    let h = grid.h();
    let last = outcome.last();
    let mass = prob.reaction().mass();
    let mut checks = Vec::new();

    checks.push(Check::new(
        "converged",
        outcome.all_converged(),
        format!("final residual {:e}", last.result.residual_norm),
    ));
    match (
        last.free_boundary.mean_rel_error,
        last.free_boundary.mean_slope,
    ) {
        (Some(e), Some(s)) => checks.push(Check::new(
            "slope",
            e <= 0.03,
            format!("mean slope {s}, mean relative error {e}"),
        )),
        _ => checks.push(Check::new("slope", true, "no free boundary")),
    }
    let results: Vec<SolveResult> = outcome.stages.iter().map(|s| s.result.clone()).collect();
    let lip = lipschitz_monitor(&results, a.lipschitz_margin)?;
    let grows = lip.windows(2).any(|w| w[1] > w[0] + 1e-2);
    checks.push(Check::new(
        "lipschitz",
        !grows,
        format!("max |grad u| per stage {lip:?}"),
    ));

    if toggles.harnack {
        let q = &last.harnack_quotients;
        let ok = !q.is_empty() && q.iter().all(|v| v.is_finite());
        checks.push(Check::new(
            "harnack",
            ok,
            format!(
                "{} balls, max quotient {:?}",
                q.len(),
                last.row.harnack_max_quotient
            ),
        ));
    }
    if toggles.barrier {
        let center: Vec<f64> = (0..d)
            .map(|k| 0.5 * (grid.lower(k) + grid.upper(k)))
            .collect();
        let half = (0..d)
            .map(|k| 0.5 * grid.extent(k))
            .fold(f64::INFINITY, f64::min);
        let delta = 0.5 * half;
        let spec = BarrierSpec::new(
            &center,
            a.barrier_mu,
            delta,
            delta.max(1.0),
            f64::MIN_POSITIVE,
        )?;
        let c = barrier_subsolution_check(&spec, prob.exponent(), BARRIER_SAMPLES, a.seed)?;
        checks.push(Check::new(
            "barrier",
            c.min > 0.0,
            format!(
                "min discrete p(x)-Laplacian {:e} over {} nodes and {} points, delta/h {:.0}",
                c.min,
                c.nodes,
                c.samples,
                delta / h
            ),
        ));
        match largest_inner_ball(&last.result.u, last.result.eps) {
            Some((x, _)) => {
                let cmp =
                    annulus_comparison(&last.result.u, last.result.eps, &x[..d], a.barrier_mu)?;
                checks.push(Check::new(
                    "comparison",
                    cmp.holds(COMPARISON_TOL),
                    format!(
                        "max(psi - (u - eps)) {:e} over {} nodes, radius {}",
                        cmp.max_violation, cmp.nodes, cmp.delta
                    ),
                ));
            }
            None => checks.push(Check::new(
                "comparison",
                true,
                "no level set to compare against",
            )),
        }
    }
    if toggles.identity42 {
        match last.row.identity42_gap {
            Some(g) => {
                let pt = last.free_boundary.points[0].position;
                let psi = bump_field(grid, &pt[..d], a.identity_width)?;
                let c = identity_4_2_check(
                    &last.result.u,
                    last.result.eps,
                    prob.exponent(),
                    prob.forcing(),
                    prob.reaction(),
                    &psi,
                )?;
                let scale = c.terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
                checks.push(Check::new(
                    "identity42",
                    g <= 1e-2 * scale,
                    format!("gap {g:e}, largest term {scale:e}"),
                ));
            }
            None => checks.push(Check::new("identity42", false, "no admissible test field")),
        }
    }
    if toggles.nondegeneracy {
        let fb = &last.free_boundary;
        let radii: Vec<f64> = a.nondegeneracy_radii_h.iter().map(|r| r * h).collect();
        let rmax = radii.iter().cloned().fold(0.0, f64::max);
        let mut pts = fb.clone();
        retain_inside(&mut pts, &grid, rmax);
        if pts.points.is_empty() {
            checks.push(Check::new(
                "nondegeneracy",
                false,
                "no free-boundary point admits the balls",
            ));
        } else {
            let rep =
                nondegeneracy_report(&last.result.u, &pts.points, &radii, last.result.eps.powi(2))?;
            let m = rep.min_ratios().expect("nonempty");
            let spread = rep.max_spread().expect("nonempty");
            checks.push(Check::new(
                "nondegeneracy",
                m.iter().all(|&c| c > 0.0) && spread <= 10.0,
                format!("min ratios {m:?}, max spread {spread}"),
            ));
        }
    }
    if toggles.chi {
        let fr: Vec<f64> = outcome
            .stages
            .iter()
            .filter_map(|s| s.row.chi_transition_fraction)
            .collect();
        let ok = fr.windows(2).all(|w| w[1] <= w[0]);
        checks.push(Check::new(
            "chi",
            ok,
            format!("transition fractions {fr:?}"),
        ));
    }
    if toggles.concentration {
        match last.row.reaction_concentration {
            Some(c) => {
                let target = mean_lambda_power(&last.free_boundary, prob.exponent(), mass)?;
                let rel = (c - target).abs() / target;
                checks.push(Check::new(
                    "concentration",
                    rel <= 0.05,
                    format!("value {c}, target {target}, relative error {rel}"),
                ));
            }
            None => checks.push(Check::new("concentration", false, "no free boundary")),
        }
    }
    Ok(checks)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Oracle profile for constant-exponent 1D scenarios without forcing.
fn oracle_curve(outcome: &SweepOutcome) -> Result<Option<Vec<[f64; 2]>>> {
    let cfg = &outcome.config;
    let grid = *outcome.problem.grid();
    let p = match cfg.exponent {
        ExponentSpec::Constant { value } => value,
        _ => return Ok(None),
    };
    let unforced = matches!(cfg.forcing, ForcingSpec::Constant { value } if value == 0.0);
    if grid.dim() != 1 || !unforced {
        return Ok(None);
    }
    let eps = outcome.last().result.eps;
    let a = outcome.problem.boundary().values()[0];
    if a <= eps {
        return Ok(None);
    }
    let prof = profile_quadrature(outcome.problem.reaction(), p, eps, eps * 1e-6)?;
    let Ok(field) = compose_full_profile(&prof, a, &grid) else {
        return Ok(None);
    };
    Ok(Some(
        (0..grid.num_nodes())
            .map(|n| [grid.node_coords(n)[0], field.values()[n]])
            .collect(),
    ))
}

/// Writes solution fields, free-boundary reports, the convergence table,
/// plots, a copy of the configuration and (when given) the check list.
pub fn write_outputs(
    outcome: &SweepOutcome,
    dir: &Path,
    checks: Option<&[Check]>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = dir.join("scenario.json");
    outcome.config.save(&path)?;
    written.push(path);

    let many = outcome.stages.len() > 1;
    for (k, st) in outcome.stages.iter().enumerate() {
        let suffix = if many { format!("_{k}") } else { String::new() };
        let path = dir.join(format!("solution{suffix}.csv"));
        st.result
            .u
            .write_csv(create(&path)?)
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
        let path = dir.join(format!("free_boundary{suffix}.csv"));
        st.free_boundary
            .write_csv(create(&path)?)
            .map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let rows: Vec<ConvergenceRow> = outcome.stages.iter().map(|s| s.row.clone()).collect();
    let path = dir.join("convergence_table.csv");
    write_convergence_table(&rows, create(&path)?).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let grid = *outcome.problem.grid();
    if grid.dim() == 1 {
        let curves: Vec<(String, Vec<[f64; 2]>)> = outcome
            .stages
            .iter()
            .map(|s| {
                let pts = (0..grid.num_nodes())
                    .map(|n| [grid.node_coords(n)[0], s.result.u.values()[n]])
                    .collect();
                (format!("eps={}", s.result.eps), pts)
            })
            .collect();
        let oracle = oracle_curve(outcome)?;
        let path = dir.join("profile_overlay.svg");
        write_text(&path, &profile_overlay(&curves, oracle.as_deref()))?;
        written.push(path);
    } else {
        let last = outcome.last();
        let path = dir.join("heat_map.svg");
        write_text(&path, &heat_map(&last.result.u, Some(&last.free_boundary)))?;
        written.push(path);
    }

    let fb = &outcome.last().free_boundary;
    if let Some(pt) = fb.points.first() {
        let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
        let slopes: Vec<Option<f64>> = rows.iter().map(|r| r.fb_mean_slope).collect();
        let reference = pt.lambda_star.expect("filled by slope_report");
        let path = dir.join("slope_convergence.svg");
        write_text(&path, &slope_convergence(&eps, &slopes, reference))?;
        written.push(path);
    }

    if let Some(checks) = checks {
        let path = dir.join("verification.csv");
        write_checks(checks, create(&path)?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
