use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pflame::oracle::{oracle_reaction_integral, profile_quadrature};
use pflame::runner::{run_sweep, verify, write_outputs, SweepOutcome};
use pflame::scenario::ScenarioConfig;
use pflame::{lambda_star, ReactionProfile, Result};

#[derive(Parser)]
#[command(
    name = "pflame",
    version,
    about = "Singular perturbation solver for the p(x)-Laplacian"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve at the final eps of the schedule (earlier entries warm-start).
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and report every eps of the schedule.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep, then run the enabled checks.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of harnack,barrier,identity42,nondegeneracy,chi,concentration.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
    /// One-dimensional profile from the first integral.
    Oracle {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        eps: f64,
        /// Write the tabulated profile here as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn out_dir(cfg: &ScenarioConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn summarize(outcome: &SweepOutcome) {
    for s in &outcome.stages {
        let r = &s.row;
        println!(
            "eps={} converged={} iterations={} residual={:e} slope={} max_rel_err={} max_grad={}",
            r.eps,
            s.result.converged,
            s.result.iterations,
            s.result.residual_norm,
            r.fb_mean_slope.map_or("-".into(), |v| v.to_string()),
            r.fb_max_rel_err.map_or("-".into(), |v| v.to_string()),
            r.max_grad_interior
        );
    }
}

fn sweep(config: &Path, out: Option<PathBuf>, final_only: bool) -> Result<bool> {
    let cfg = ScenarioConfig::load(config)?;
    let outcome = run_sweep(&cfg, final_only)?;
    summarize(&outcome);
    let dir = out_dir(&cfg, out);
    write_outputs(&outcome, &dir, None)?;
    println!("wrote {}", dir.display());
    Ok(outcome.all_converged())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { config, out } => sweep(&config, out, true),
        Command::Sweep { config, out } => sweep(&config, out, false),
        Command::Verify { config, out, only } => {
            let cfg = ScenarioConfig::load(&config)?;
            let toggles = match &only {
                Some(names) => cfg.verify.restricted(names)?,
                None => cfg.verify.clone(),
            };
            let outcome = run_sweep(&cfg, false)?;
            summarize(&outcome);
            let checks = verify(&outcome, &toggles)?;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let dir = out_dir(&cfg, out);
            write_outputs(&outcome, &dir, Some(&checks))?;
            println!("wrote {}", dir.display());
            Ok(checks.iter().all(|c| c.passed))
        }
        Command::Oracle { p, mass, eps, csv } => {
            let reaction = ReactionProfile::quadratic(mass)?;
            let prof = profile_quadrature(&reaction, p, eps, eps * 1e-6)?;
            println!("lambda_star={}", lambda_star(p, mass)?);
            println!("lambda_edge={}", prof.lambda_edge());
            println!("layer_length={}", prof.length());
            println!("reaction_integral={}", oracle_reaction_integral(&prof)?);
            if let Some(path) = csv {
                let file = std::fs::File::create(&path).map_err(|e| pflame::Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                prof.write_csv(std::io::BufWriter::new(file))
                    .map_err(|e| pflame::Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
