//! Scenario configuration files (JSON) and their translation into solver
//! inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::grid::{Grid, ScalarField};
use crate::reaction::ReactionProfile;
use crate::solver::{DirichletProblem, SolverConfig, Stage};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridSpec,
    pub exponent: ExponentSpec,
    pub reaction: ReactionSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    pub boundary: BoundarySpec,
    /// Reported continuation stages, strictly decreasing.
    pub eps_schedule: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub verify: VerifyToggles,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
}

/// `p(x)`: a constant, `base + gradient·x`, or piecewise linear in one
/// coordinate through `(coordinate, p)` points, held constant outside them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant { value: f64 },
    Linear { base: f64, gradient: Vec<f64> },
    Table { axis: usize, points: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSpec {
    pub mass: f64,
    #[serde(default)]
    pub profile: ProfileSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    #[default]
    Quadratic,
    Table {
        points: Vec<[f64; 2]>,
    },
}

/// `f(x)`: a constant, or `value` inside the open ball and 0 outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Constant {
        value: f64,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
        value: f64,
    },
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec::Constant { value: 0.0 }
    }
}

/// Dirichlet data: a constant or the positive part of `base + gradient·x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant { value: f64 },
    Affine { base: f64, gradient: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub max_refinements: usize,
    /// Unreported stages run before the first `eps_schedule` entry.
    pub warmup: Vec<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSpec {
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            delta: d.delta,
            max_refinements: d.max_refinements,
            warmup: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyToggles {
    pub harnack: bool,
    pub barrier: bool,
    pub identity42: bool,
    pub nondegeneracy: bool,
    pub chi: bool,
    pub concentration: bool,
}

impl VerifyToggles {
    pub const NAMES: [&'static str; 6] = [
        "harnack",
        "barrier",
        "identity42",
        "nondegeneracy",
        "chi",
        "concentration",
    ];

    pub fn get(&self, name: &str) -> Option<bool> {
        Some(match name {
            "harnack" => self.harnack,
            "barrier" => self.barrier,
            "identity42" => self.identity42,
            "nondegeneracy" => self.nondegeneracy,
            "chi" => self.chi,
            "concentration" => self.concentration,
            _ => return None,
        })
    }

    /// Keeps only the toggles named in `only`.
    pub fn restricted(&self, only: &[String]) -> Result<Self> {
        for name in only {
            if self.get(name).is_none() {
                return Err(Error::Config {
                    path: "--only".into(),
                    message: format!(
                        "unknown check `{name}`, expected one of {}",
                        Self::NAMES.join(", ")
                    ),
                });
            }
        }
        let keep = |n: &str, v: bool| v && only.iter().any(|o| o == n);
        Ok(VerifyToggles {
            harnack: keep("harnack", self.harnack),
            barrier: keep("barrier", self.barrier),
            identity42: keep("identity42", self.identity42),
            nondegeneracy: keep("nondegeneracy", self.nondegeneracy),
            chi: keep("chi", self.chi),
            concentration: keep("concentration", self.concentration),
        })
    }
}

/// Diagnostic parameters. Lengths marked `_h` are in units of the mesh size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub slope_probe_h: f64,
    pub lipschitz_margin: f64,
    /// Strip half-width as a multiple of `eps`.
    pub concentration_width_eps: f64,
    pub harnack_balls: usize,
    pub harnack_radii_h: [f64; 2],
    pub nondegeneracy_radii_h: Vec<f64>,
    pub identity_width: f64,
    pub barrier_mu: f64,
    pub seed: u64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            slope_probe_h: 4.0,
            lipschitz_margin: 0.1,
            concentration_width_eps: 10.0,
            harnack_balls: 100,
            harnack_radii_h: [2.0, 5.0],
            nondegeneracy_radii_h: vec![4.0, 8.0, 12.0, 16.0, 20.0],
            identity_width: 0.05,
            barrier_mu: 64.0,
            seed: 1,
        }
    }
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn check_vec(path: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(config_err(
            path,
            format!("expected {dim} entries, got {}", v.len()),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(config_err(path, "entries must be finite"));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn dim(&self) -> usize {
        self.grid.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(config_err("name", "must not be empty"));
        }
        let d = self.dim();
        if d != 1 && d != 2 {
            return Err(config_err("grid.nodes", "expected one or two entries"));
        }
        check_vec("grid.lower", &self.grid.lower, d)?;
        check_vec("grid.upper", &self.grid.upper, d)?;
        match &self.exponent {
            ExponentSpec::Constant { value } => {
                if !(*value > 1.0 && value.is_finite()) {
                    return Err(config_err("exponent.value", "must exceed 1"));
                }
            }
            ExponentSpec::Linear { gradient, .. } => check_vec("exponent.gradient", gradient, d)?,
            ExponentSpec::Table { axis, points } => {
                if *axis >= d {
                    return Err(config_err("exponent.axis", format!("must be below {d}")));
                }
                if points.is_empty() {
                    return Err(config_err("exponent.points", "must not be empty"));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(config_err(
                        "exponent.points",
                        "coordinates must be strictly increasing",
                    ));
                }
            }
        }
        if !(self.reaction.mass > 0.0 && self.reaction.mass.is_finite()) {
            return Err(config_err("reaction.mass", "must be positive"));
        }
        match &self.forcing {
            ForcingSpec::Constant { value } if !value.is_finite() => {
                return Err(config_err("forcing.value", "must be finite"));
            }
            ForcingSpec::Ball {
                center,
                radius,
                value,
            } => {
                check_vec("forcing.center", center, d)?;
                if !(*radius > 0.0) || !value.is_finite() {
                    return Err(config_err(
                        "forcing",
                        "radius must be positive, value finite",
                    ));
                }
            }
            _ => {}
        }
        if let BoundarySpec::Affine { gradient, base } = &self.boundary {
            check_vec("boundary.gradient", gradient, d)?;
            if !base.is_finite() {
                return Err(config_err("boundary.base", "must be finite"));
            }
        }
        if let BoundarySpec::Constant { value } = &self.boundary {
            if !(*value >= 0.0 && value.is_finite()) {
                return Err(config_err("boundary.value", "must be nonnegative"));
            }
        }
        check_schedule("eps_schedule", &self.eps_schedule)?;
        if !self.solver.warmup.is_empty() {
            check_schedule("solver.warmup", &self.solver.warmup)?;
        }
        if let (Some(&w), Some(&e)) = (self.solver.warmup.last(), self.eps_schedule.first()) {
            if w <= e {
                return Err(config_err(
                    "solver.warmup",
                    "warm-up stages must lie above the first eps",
                ));
            }
        }
        let a = &self.analysis;
        if !(a.slope_probe_h > 0.0 && a.lipschitz_margin > 0.0 && a.concentration_width_eps > 0.0) {
            return Err(config_err(
                "analysis",
                "probe, margin and width must be positive",
            ));
        }
        if !(a.harnack_radii_h[0] > 0.0 && a.harnack_radii_h[1] >= a.harnack_radii_h[0]) {
            return Err(config_err("analysis.harnack_radii_h", "invalid range"));
        }
        if a.nondegeneracy_radii_h.iter().any(|r| !(*r > 0.0)) {
            return Err(config_err(
                "analysis.nondegeneracy_radii_h",
                "must be positive",
            ));
        }
        self.build_grid()?;
        self.solver_config().validate()?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        Grid::new(&self.grid.nodes, &self.grid.lower, &self.grid.upper)
    }

    pub fn build_exponent(&self, grid: Grid) -> Result<ExponentField> {
        match &self.exponent {
            ExponentSpec::Constant { value } => ExponentField::constant(grid, *value),
            ExponentSpec::Linear { base, gradient } => ExponentField::from_fn(grid, |x| {
                base + x.iter().zip(gradient).map(|(a, b)| a * b).sum::<f64>()
            }),
            ExponentSpec::Table { axis, points } => {
                ExponentField::from_fn(grid, |x| table_value(points, x[*axis]))
            }
        }
    }

    pub fn build_reaction(&self) -> Result<ReactionProfile> {
        match &self.reaction.profile {
            ProfileSpec::Quadratic => ReactionProfile::quadratic(self.reaction.mass),
            ProfileSpec::Table { points } => {
                let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
                ReactionProfile::table(&pts, self.reaction.mass)
            }
        }
    }

    pub fn build_forcing(&self, grid: Grid) -> ScalarField {
        match &self.forcing {
            ForcingSpec::Constant { value } => ScalarField::constant(grid, *value),
            ForcingSpec::Ball {
                center,
                radius,
                value,
            } => ScalarField::from_fn(grid, |x| {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                if r2 < radius * radius {
                    *value
                } else {
                    0.0
                }
            }),
        }
    }

    pub fn build_boundary(&self, grid: Grid) -> ScalarField {
        match &self.boundary {
            BoundarySpec::Constant { value } => ScalarField::constant(grid, *value),
            BoundarySpec::Affine { base, gradient } => ScalarField::from_fn(grid, |x| {
                (base + x.iter().zip(gradient).map(|(a, b)| a * b).sum::<f64>()).max(0.0)
            }),
        }
    }

    /// The problem at the final `eps`.
    pub fn build_problem(&self) -> Result<DirichletProblem> {
        let grid = self.build_grid()?;
        DirichletProblem::new(
            self.build_exponent(grid)?,
            self.build_forcing(grid),
            self.build_reaction()?,
            *self.eps_schedule.last().expect("validated"),
            self.build_boundary(grid),
        )
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            delta: s.delta,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            max_refinements: s.max_refinements,
            schedule: s
                .warmup
                .iter()
                .map(|&eps| Stage { eps, delta: None })
                .collect(),
            ..SolverConfig::default()
        }
    }

    /// Copy with every grid axis refined by `factor` (cells multiplied).
    pub fn refined(&self, factor: usize) -> Self {
        let mut out = self.clone();
        for n in &mut out.grid.nodes {
            *n = (*n - 1) * factor + 1;
        }
        out
    }
}

fn check_schedule(path: &str, eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(config_err(path, "must not be empty"));
    }
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(config_err(path, "entries must be positive"));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config_err(path, "must be strictly decreasing"));
    }
    Ok(())
}

fn table_value(points: &[[f64; 2]], t: f64) -> f64 {
    let k = points.partition_point(|p| p[0] <= t);
    if k == 0 {
        return points[0][1];
    }
    if k == points.len() {
        return points[k - 1][1];
    }
    let [x0, y0] = points[k - 1];
    let [x1, y1] = points[k];
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}
