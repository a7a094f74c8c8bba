//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pflame::analysis::{
    bump_field, chi_field, chi_transition_fraction, harnack_quotient, identity_4_2_check,
    nondegeneracy_report, sample_admissible_balls, FreeBoundaryPoint,
};
use pflame::barriers::{
    annulus_comparison, barrier_subsolution_check, monotonicity_check, BarrierSpec,
};
use pflame::exponent::{holder_inequality_check, luxemburg_norm, modular, poincare_ratio};
use pflame::oracle::{compose_full_profile, oracle_reaction_integral, profile_quadrature};
use pflame::runner::{largest_inner_ball, run_sweep, SweepOutcome};
use pflame::scenario::ScenarioConfig;
use pflame::solver::energy_gradient_check;
use pflame::{
    lambda_star, DirichletProblem, ExponentField, Grid, ReactionProfile, Result, ScalarField,
};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        passed,
        detail: detail.into(),
    })
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"));
    ScenarioConfig::load(&path).expect("bundled scenario")
}

struct Timed {
    outcome: SweepOutcome,
    elapsed: Duration,
}

fn timed_sweep(cfg: &ScenarioConfig) -> Timed {
    let t = Instant::now();
    let outcome = run_sweep(cfg, false).expect("sweep");
    Timed {
        outcome,
        elapsed: t.elapsed(),
    }
}

fn flame1d() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| timed_sweep(&scenario("flame1d")))
}

fn flame1d_p3() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| timed_sweep(&scenario("flame1d-p3")))
}

fn flame2d_radial() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| timed_sweep(&scenario("flame2d-radial")))
}

fn final_only(cfg: &ScenarioConfig) -> Result<SweepOutcome> {
    run_sweep(cfg, true)
}

fn sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Result<Verdict> {
    let d = flame1d();
    let last = d.outcome.last();
    let s = last.free_boundary.mean_slope.unwrap_or(f64::NAN);
    let target = lambda_star(2.0, 0.5)?;
    let e1 = rel(s, target);

    let d3 = flame1d_p3();
    let s3 = d3
        .outcome
        .last()
        .free_boundary
        .mean_slope
        .unwrap_or(f64::NAN);
    let target3 = 1.5f64.powf(1.0 / 3.0);
    let e3 = rel(s3, target3);

    let converged = d.outcome.all_converged() && d3.outcome.all_converged();
    let secs = d.elapsed.as_secs_f64();
    verdict(
        converged && e1 <= 0.02 && e3 <= 0.02 && secs < 60.0,
        format!(
            "flame1d slope {s:.6} vs {target} (rel {e1:.2e}, runtime {secs:.1} s); \
             flame1d-p3 slope {s3:.6} vs {target3:.6} (rel {e3:.2e}); tolerance 2%"
        ),
    )
}

fn criterion_2() -> Result<Verdict> {
    let out = final_only(&scenario("flame1d-varp"))?;
    let p = out.problem.exponent();
    let fb = &out.last().free_boundary;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for pt in &fb.points {
        let x = pt.position[0];
        let pl = p.at(&[x])?;
        let target = lambda_star(pl, 0.5)?;
        let s = pt.slope.unwrap_or(f64::NAN);
        let e = rel(s, target);
        worst = worst.max(if e.is_nan() { f64::INFINITY } else { e });
        parts.push(format!(
            "x*={x:.5} p={pl:.5} slope {s:.6} vs {target:.6} (rel {e:.2e})"
        ));
    }
    verdict(
        !fb.points.is_empty() && out.all_converged() && worst <= 0.03,
        format!("{}; tolerance 3%", parts.join(", ")),
    )
}

fn oracle_error(out: &SweepOutcome) -> Result<f64> {
    let last = &out.last().result;
    let grid = *out.problem.grid();
    let eps = last.eps;
    let prof = profile_quadrature(out.problem.reaction(), 2.0, eps, 1e-6 * eps)?;
    let a = out.problem.boundary().values()[0];
    let oracle = compose_full_profile(&prof, a, &grid)?;
    let floor = 0.01 * eps;
    Ok((0..grid.num_nodes())
        .filter(|&i| oracle.values()[i] >= floor || last.u.values()[i] >= floor)
        .map(|i| (oracle.values()[i] - last.u.values()[i]).abs())
        .fold(0.0, f64::max))
}

fn criterion_3() -> Result<Verdict> {
    let coarse = &flame1d().outcome;
    let e_h = oracle_error(coarse)?;
    let fine = final_only(&scenario("flame1d").refined(2))?;
    let e_h2 = oracle_error(&fine)?;
    let ratio = e_h2 / e_h;
    verdict(
        e_h <= 1e-3 && (0.4..=0.6).contains(&ratio) && fine.all_converged(),
        format!(
            "L-inf error {e_h:.3e} at h={:e} (bound 1e-3), {e_h2:.3e} at h/2; \
             ratio {ratio:.3} (band [0.4, 0.6])",
            coarse.problem.grid().h()
        ),
    )
}

fn criterion_4() -> Result<Verdict> {
    let lip: Vec<f64> = flame1d()
        .outcome
        .stages
        .iter()
        .map(|s| s.row.max_grad_interior)
        .collect();
    let in_band = lip.iter().all(|&g| (0.9..=1.15).contains(&g));
    let monotone = lip.windows(2).all(|w| w[1] <= w[0] + 1e-2);
    verdict(
        in_band && monotone,
        format!("max interior |grad u| per eps {lip:.5?}; band [0.9, 1.15], growth tolerance 1e-2"),
    )
}

fn random_problem(rng: &mut ChaCha8Rng, kind: usize) -> Result<(DirichletProblem, ScalarField)> {
    let nx = rng.random_range(8..14);
    let ny = rng.random_range(8..14);
    let grid = Grid::new_2d([nx, ny], [0.0, 0.0], [1.0, rng.random_range(0.6..1.2)])?;
    let p = match kind {
        0 => ExponentField::constant(grid, rng.random_range(1.5..4.0))?,
        1 => {
            let (a, b, c) = (
                rng.random_range(1.6..2.4),
                rng.random_range(-0.4..0.8),
                rng.random_range(-0.4..0.8),
            );
            ExponentField::from_fn(grid, |x| a + b * x[0] + c * x[1])?
        }
        _ => {
            let k = rng.random_range(1.0..4.0);
            ExponentField::from_fn(grid, |x| 2.5 + 1.2 * (k * x[0]).sin() * (2.0 * x[1]).cos())?
        }
    };
    let amp = rng.random_range(-2.0..2.0);
    let f = ScalarField::from_fn(grid, |x| amp * (3.0 * x[0] + x[1]).cos());
    let slope = rng.random_range(0.0..0.3);
    let bd = ScalarField::from_fn(grid, |x| slope * x[1]);
    let eps = rng.random_range(0.05..0.3);
    let reaction = ReactionProfile::quadratic(rng.random_range(0.2..1.0))?;
    let prob = DirichletProblem::new(p, f, reaction, eps, bd)?;
    let values: Vec<f64> = (0..grid.num_nodes())
        .map(|_| rng.random_range(0.0..0.4))
        .collect();
    let u = prob.with_boundary(&ScalarField::new(grid, values)?)?;
    Ok((prob, u))
}

fn criterion_5() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut errs = Vec::new();
    for kind in 0..3 {
        let (prob, u) = random_problem(&mut rng, kind)?;
        let delta = rng.random_range(0.01..0.1);
        errs.push(energy_gradient_check(
            &prob,
            &u,
            delta,
            20,
            100 + kind as u64,
        )?);
    }
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    verdict(
        worst <= 1e-6,
        format!(
            "relative mismatch per problem {} over 20 directions each; tolerance 1e-6",
            sci(&errs)
        ),
    )
}

fn criterion_6() -> Result<Verdict> {
    let delta = 0.25;
    let cells: f64 = 256.0;
    let h = delta / cells;
    let half: f64 = 0.28125;
    let n = (2.0 * half / h).round() as usize + 1;
    let grid = Grid::new_2d([n, n], [0.5 - half, 0.5 - half], [0.5 + half, 0.5 + half])?;
    let spec = BarrierSpec::new(&[0.5, 0.5], 64.0, delta, 1.0, f64::MIN_POSITIVE)?;
    let fields = [
        ("p=2", ExponentField::constant(grid, 2.0)?),
        ("p=3", ExponentField::constant(grid, 3.0)?),
        ("p=2+x1", ExponentField::from_fn(grid, |x| 2.0 + x[0])?),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (name, p)) in fields.iter().enumerate() {
        let c = barrier_subsolution_check(&spec, p, 1000, 60 + k as u64)?;
        ok &= c.min > 0.0;
        let mut line = format!(
            "{name} min {:.3e} over {} nodes + {} points",
            c.min, c.nodes, c.samples
        );
        if k == 0 {
            let r = rel(c.node_min, c.closed_form_node_min);
            ok &= r <= 0.05;
            line += &format!(
                ", closed-form min {:.4e} vs discrete {:.4e} (rel {r:.2e}, tolerance 5%)",
                c.closed_form_node_min, c.node_min
            );
        }
        parts.push(line);
    }
    verdict(ok, format!("delta/h {cells}; {}", parts.join("; ")))
}

fn criterion_7() -> Result<Verdict> {
    let out = &flame2d_radial().outcome;
    let last = &out.last().result;
    let Some((x, _)) = largest_inner_ball(&last.u, last.eps) else {
        return verdict(false, "no level set {u <= eps}");
    };
    let cmp = annulus_comparison(&last.u, last.eps, &x[..2], 64.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    let trials = 10_000;
    for t in 0..trials {
        let dim = 1 + t % 2;
        let eta: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let xi: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let p = rng.random_range(1.1..6.0);
        let (lhs, rhs) = monotonicity_check(&eta, &xi, p)?;
        let c = if p >= 2.0 {
            2f64.powf(p - 2.0)
        } else {
            1.0 / (p - 1.0)
        };
        if !(rhs >= 0.0 && lhs <= c * rhs * (1.0 + 1e-12)) {
            violations += 1;
        }
    }
    verdict(
        cmp.holds(1e-8) && violations == 0,
        format!(
            "max(psi - (u - eps)) {:.3e} over {} annulus nodes (radius {:.4}, amplitude {:.4}), \
             tolerance 1e-8; monotonicity violations {violations}/{trials}",
            cmp.max_violation, cmp.nodes, cmp.delta, cmp.amplitude
        ),
    )
}

fn criterion_8() -> Result<Verdict> {
    let coarse = &flame2d_radial().outcome;
    let cfg = &coarse.config;
    let fine = final_only(&cfg.refined(2))?;
    let u_h = &coarse.last().result;
    let u_h2 = &fine.last().result;
    let h = coarse.problem.grid().h();
    let r = cfg.analysis.harnack_radii_h;
    let balls = sample_admissible_balls(
        &u_h.u,
        100,
        (r[0] * h, r[1] * h),
        u_h.eps,
        cfg.analysis.seed,
    )?;
    let mut q = [Vec::new(), Vec::new()];
    for (c, radius) in &balls {
        q[0].push(
            harnack_quotient(
                &u_h.u,
                coarse.problem.forcing(),
                coarse.problem.exponent(),
                &c[..2],
                *radius,
            )?
            .quotient,
        );
        q[1].push(
            harnack_quotient(
                &u_h2.u,
                fine.problem.forcing(),
                fine.problem.exponent(),
                &c[..2],
                *radius,
            )?
            .quotient,
        );
    }
    let finite = q.iter().flatten().all(|v| v.is_finite());
    let m0 = q[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let m1 = q[1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let change = rel(m1, m0);
    verdict(
        balls.len() == 100 && finite && change <= 0.10 && fine.all_converged(),
        format!(
            "{} balls, max quotient {m0:.5} at h, {m1:.5} at h/2 (change {change:.2e}, tolerance 10%)",
            balls.len()
        ),
    )
}

fn identity_gap(out: &SweepOutcome, center: f64) -> Result<f64> {
    let last = &out.last().result;
    let prob = &out.problem;
    let psi = bump_field(*prob.grid(), &[center], out.config.analysis.identity_width)?;
    Ok(identity_4_2_check(
        &last.u,
        last.eps,
        prob.exponent(),
        prob.forcing(),
        prob.reaction(),
        &psi,
    )?
    .gap)
}

fn criterion_9() -> Result<Verdict> {
    let cfg = scenario("flame1d-varp");
    let coarse = final_only(&cfg)?;
    let fine = final_only(&cfg.refined(2))?;
    let Some(pt) = coarse.last().free_boundary.points.first() else {
        return verdict(false, "no free boundary");
    };
    let x = pt.position[0];
    let g0 = identity_gap(&coarse, x)?;
    let g1 = identity_gap(&fine, x)?;
    let order = (g0 / g1).log2();
    verdict(
        order >= 1.0,
        format!("gap {g0:.3e} at h, {g1:.3e} at h/2, observed order {order:.2} (need >= 1), test field centered at x={x:.5}"),
    )
}

fn chi_and_concentration(name: &str, out: &SweepOutcome, p: f64) -> Result<(bool, String)> {
    let mass = out.problem.reaction().mass();
    let fr = out
        .stages
        .iter()
        .map(|s| {
            let chi = chi_field(&s.result.u, s.result.eps, out.problem.reaction())?;
            Ok(chi_transition_fraction(&chi, mass))
        })
        .collect::<Result<Vec<f64>>>()?;
    let decreasing = fr.windows(2).all(|w| w[1] < w[0]);
    let c = out.last().row.reaction_concentration.unwrap_or(f64::NAN);
    let target = lambda_star(p, mass)?.powf(p - 1.0);
    let eps = out.last().result.eps;
    let oracle = oracle_reaction_integral(&profile_quadrature(
        out.problem.reaction(),
        p,
        eps,
        1e-6 * eps,
    )?)?;
    let e = rel(c, target);
    Ok((
        decreasing && e <= 0.05,
        format!(
            "{name}: chi fractions {}; concentration {c:.5} vs {target:.5} (rel {e:.2e}, \
             oracle integral {oracle:.5})",
            sci(&fr)
        ),
    ))
}

fn criterion_10() -> Result<Verdict> {
    let (a, da) = chi_and_concentration("flame1d", &flame1d().outcome, 2.0)?;
    let (b, db) = chi_and_concentration("flame1d-p3", &flame1d_p3().outcome, 3.0)?;
    verdict(a && b, format!("{da}; {db}; tolerance 5%"))
}

fn criterion_11() -> Result<Verdict> {
    let out = &flame2d_radial().outcome;
    let last = out.last();
    let grid = *out.problem.grid();
    let h = grid.h();
    let radii: Vec<f64> = (4..=20).step_by(4).map(|k| k as f64 * h).collect();
    let rmax = radii[radii.len() - 1];
    let pts: Vec<FreeBoundaryPoint> = last
        .free_boundary
        .points
        .iter()
        .filter(|p| grid.distance_to_boundary(&p.position) >= rmax)
        .cloned()
        .collect();
    let total = last.free_boundary.points.len();
    let rep = nondegeneracy_report(&last.result.u, &pts, &radii, last.result.eps.powi(2))?;
    let m = rep.min_ratios().unwrap_or([f64::NAN; 3]);
    let bounded = m.iter().all(|&c| c > 0.0);

    let pgrid = Grid::new_2d([201, 201], [-1.0, -1.0], [1.0, 1.0])?;
    let mut planar = true;
    let mut fixtures = Vec::new();
    for (p, mass) in [(2.0, 0.5), (3.0, 1.0)] {
        let lam = lambda_star(p, mass)?;
        let u = ScalarField::from_fn(pgrid, |x| lam * x[0].max(0.0));
        let fb = FreeBoundaryPoint {
            position: [0.0, 0.0],
            normal: [1.0, 0.0],
            slope: None,
            lambda_star: None,
            rel_error: None,
        };
        let r = nondegeneracy_report(&u, &[fb], &[0.1, 0.25, 0.5], 1e-12)?;
        let expect = 2.0 / (3.0 * PI) * lam;
        let worst = r
            .entries
            .iter()
            .map(|e| rel(e.ball_ratio, expect))
            .fold(0.0, f64::max);
        planar &= worst <= 0.02;
        fixtures.push(format!(
            "p={p}: ball ratio rel err {worst:.2e} vs {expect:.5}"
        ));
    }
    verdict(
        !pts.is_empty() && bounded && planar,
        format!(
            "{} of {total} front points, radii 4h..20h, min ratios (ball, sphere, sup) {m:.4?}; \
             planar {} (tolerance 2%)",
            pts.len(),
            fixtures.join(", ")
        ),
    )
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng, scale: f64) -> ScalarField {
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    ScalarField::from_fn(grid, |x| {
        scale
            * (c[0]
                + c[1] * (3.0 * x[0]).sin()
                + c[2] * (5.0 * x[1] + c[3]).cos()
                + c[3] * x[0] * x[1])
    })
}

fn random_exponent(grid: Grid, rng: &mut ChaCha8Rng) -> Result<ExponentField> {
    let (a, b, c) = (
        rng.random_range(1.3..3.0),
        rng.random_range(0.0..1.5),
        rng.random_range(1.0..6.0),
    );
    ExponentField::from_fn(grid, |x| a + b * (0.5 + 0.5 * (c * x[0] + x[1]).sin()))
}

fn criterion_12() -> Result<Verdict> {
    let grid = Grid::new_2d([33, 29], [0.0, 0.0], [1.0, 0.8])?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut parts = Vec::new();

    let mut bracket_fail = 0;
    let mut homog_worst: f64 = 0.0;
    for k in 0..100 {
        let p = random_exponent(grid, &mut rng)?;
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let u = random_field(grid, &mut rng, scale);
        let rho = modular(&u, &p)?;
        let n = luxemburg_norm(&u, &p)?;
        let (lo, hi) = (p.p_min(), p.p_max());
        let (a, b) = if n >= 1.0 {
            (n.powf(lo), n.powf(hi))
        } else {
            (n.powf(hi), n.powf(lo))
        };
        if !(rho >= a * (1.0 - 1e-9) && rho <= b * (1.0 + 1e-9)) {
            bracket_fail += 1;
        }
        let t = if k % 2 == 0 { 3.7 } else { -0.21 };
        let nt = luxemburg_norm(&u.scaled(t), &p)?;
        homog_worst = homog_worst.max(rel(nt, t.abs() * n));
    }
    parts.push(format!("bracket failures {bracket_fail}/100"));
    parts.push(format!("homogeneity rel err {homog_worst:.1e}"));

    let mut classical_worst: f64 = 0.0;
    for _ in 0..50 {
        let p0 = rng.random_range(1.2..5.0);
        let p = ExponentField::constant(grid, p0)?;
        let scale = rng.random_range(0.1..10.0);
        let u = random_field(grid, &mut rng, scale);
        let lp = modular(&u, &p)?.powf(1.0 / p0);
        classical_worst = classical_worst.max(rel(luxemburg_norm(&u, &p)?, lp));
    }
    parts.push(format!(
        "constant-p vs classical L^p rel err {classical_worst:.1e}"
    ));

    let mut holder_max: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_exponent(grid, &mut rng)?;
        let (sf, sg) = (rng.random_range(0.1..5.0), rng.random_range(0.1..5.0));
        let f = random_field(grid, &mut rng, sf);
        let g = random_field(grid, &mut rng, sg);
        holder_max = holder_max.max(holder_inequality_check(&f, &g, &p)?);
    }
    parts.push(format!("max Hoelder ratio {holder_max:.4} over 1000 pairs"));

    let pgrid = Grid::new_2d([41, 41], [0.0, 0.0], [1.0, 1.0])?;
    let mut poincare_max: f64 = 0.0;
    let mut poincare_ok = true;
    for _ in 0..50 {
        let p = random_exponent(pgrid, &mut rng)?;
        let (k, l) = (rng.random_range(1..4) as f64, rng.random_range(1..4) as f64);
        let amp = rng.random_range(0.1..10.0);
        let u = ScalarField::from_fn(pgrid, |x| {
            amp * (k * PI * x[0]).sin() * (l * PI * x[1]).sin()
        });
        let r = poincare_ratio(&u, &p)?;
        poincare_ok &= r.is_finite() && r > 0.0;
        poincare_max = poincare_max.max(r);
    }
    parts.push(format!(
        "max Poincare ratio {poincare_max:.4} over 50 fields (bound 2)"
    ));

    verdict(
        bracket_fail == 0
            && homog_worst <= 1e-10
            && classical_worst <= 1e-8
            && holder_max <= 1.0
            && poincare_ok
            && poincare_max <= 2.0,
        parts.join(", "),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Verdict>); 12] = [
        ("free-boundary condition", criterion_1),
        ("variable exponent, pointwise", criterion_2),
        ("oracle profile equivalence", criterion_3),
        ("uniform Lipschitz bound", criterion_4),
        ("energy/residual consistency", criterion_5),
        ("barrier subsolution", criterion_6),
        ("comparison principle", criterion_7),
        ("Harnack", criterion_8),
        ("domain-variation identity", criterion_9),
        ("chi and concentration", criterion_10),
        ("nondegeneracy", criterion_11),
        ("variable-exponent spaces", criterion_12),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let v = run().unwrap_or_else(|e| Verdict {
            passed: false,
            detail: format!("error: {e}"),
        });
        if !v.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} | {}",
            k + 1,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
