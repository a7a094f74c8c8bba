//! Tabular output.

use std::io::Write;

pub const CONVERGENCE_HEADER: &str = "eps,h,max_grad_interior,fb_mean_slope,fb_max_rel_err,\
reaction_concentration,chi_transition_fraction,harnack_max_quotient,identity42_gap";

/// One row of the convergence table. Missing diagnostics are written as
/// empty cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub h: f64,
    pub max_grad_interior: f64,
    pub fb_mean_slope: Option<f64>,
    pub fb_max_rel_err: Option<f64>,
    pub reaction_concentration: Option<f64>,
    pub chi_transition_fraction: Option<f64>,
    pub harnack_max_quotient: Option<f64>,
    pub identity42_gap: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_convergence_table<W: Write>(rows: &[ConvergenceRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.eps,
            r.h,
            r.max_grad_interior,
            cell(r.fb_mean_slope),
            cell(r.fb_max_rel_err),
            cell(r.reaction_concentration),
            cell(r.chi_transition_fraction),
            cell(r.harnack_max_quotient),
            cell(r.identity42_gap)
        )?;
    }
    Ok(())
}

/// Outcome of one verification item.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn write_checks<W: Write>(checks: &[Check], mut w: W) -> std::io::Result<()> {
    writeln!(w, "check,passed,detail")?;
    for c in checks {
        writeln!(
            w,
            "{},{},\"{}\"",
            c.name,
            c.passed,
            c.detail.replace('"', "'")
        )?;
    }
    Ok(())
}
