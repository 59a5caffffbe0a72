//! JSON run configuration.
//!
//! Specs for Hamiltonians, data and grids are plain serde mirrors of the domain
//! constructors; closures cannot be configured from a file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{Axis, DatumSpec, HamiltonianSpec, Potential, QuadForm, SpaceGrid};
use crate::error::{Error, Result};
use crate::settings::SolverConfig;
use crate::viscosity::SplittingConfig;

/// Experiment tags accepted in `experiment`, with one-line descriptions and the
/// fields each one reads beyond the common ones.
pub const EXPERIMENTS: [(&str, &str, &[&str]); 7] = [
    ("solve", "minmax (or scheme) field of u_t + H = 0 from a C1 datum", &["hamiltonian", "datum", "grid", "instants", "method?"]),
    ("compare", "minmax field against the Lax-Friedrichs field, optionally under grid refinement", &["hamiltonian", "datum", "grid", "instants", "tolerances.compare?", "refine?"]),
    ("markov", "composition residual J(t3,t2) J(t2,t1) - J(t3,t1) on the grid", &["hamiltonian", "datum", "grid", "instants[3]", "refine?"]),
    ("hysteresis", "forward-then-backward residual J(t1,t2) J(t2,t1) sigma - sigma", &["hamiltonian", "datum", "grid", "instants[2]"]),
    ("splitting", "minmax versus viscosity value at (t, 0) for H = p - p^3 - x", &["instants", "splitting?"]),
    ("hopf", "maxmin/minmax bounds for a separable convex-concave Hamiltonian", &["hamiltonian", "datum", "grid", "instants"]),
    ("c0", "C0 datum through a mollification schedule, with the Cauchy audit", &["hamiltonian", "datum", "grid", "instants", "schedule"]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentTag {
    Solve,
    Compare,
    Markov,
    Hysteresis,
    Splitting,
    Hopf,
    C0,
}

impl ExperimentTag {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => Self::Solve,
            "compare" => Self::Compare,
            "markov" => Self::Markov,
            "hysteresis" => Self::Hysteresis,
            "splitting" => Self::Splitting,
            "hopf" => Self::Hopf,
            "c0" => Self::C0,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Compare => "compare",
            Self::Markov => "markov",
            Self::Hysteresis => "hysteresis",
            Self::Splitting => "splitting",
            Self::Hopf => "hopf",
            Self::C0 => "c0",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    CosBump {
        amp: f64,
        radius: f64,
        #[serde(default = "unit_wave")]
        wave: [f64; 2],
        #[serde(default)]
        omega: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianConfig {
    /// `a p^2 / 2` on the circle.
    FreeParticle {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "zero_potential")]
        potential: PotentialConfig,
    },
    /// `<A p, p> / 2 + V` with `A` given as a 1x1 or 2x2 symmetric matrix.
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default = "zero_potential")]
        potential: PotentialConfig,
    },
    /// Convex factor on `x1` plus concave factor on `x2`.
    Separable {
        convex: Box<HamiltonianConfig>,
        concave: Box<HamiltonianConfig>,
    },
    CubicExample,
}

fn one() -> f64 {
    1.0
}

fn unit_wave() -> [f64; 2] {
    [1.0, 0.0]
}

fn zero_potential() -> PotentialConfig {
    PotentialConfig::Zero
}

impl PotentialConfig {
    fn build(&self) -> Potential {
        match *self {
            PotentialConfig::Zero => Potential::Zero,
            PotentialConfig::CosBump {
                amp,
                radius,
                wave,
                omega,
            } => Potential::CosBump {
                amp,
                wave,
                radius,
                omega,
            },
        }
    }
}

impl HamiltonianConfig {
    pub fn build(&self, horizon: f64, shift: f64) -> Result<HamiltonianSpec> {
        let h = match self {
            HamiltonianConfig::FreeParticle { a, potential } => {
                HamiltonianSpec::quadratic(QuadForm::scalar(*a), potential.build(), horizon)
            }
            HamiltonianConfig::Quadratic { matrix, potential } => {
                let a = match matrix.as_slice() {
                    [r] if r.len() == 1 => QuadForm::scalar(r[0]),
                    [r0, r1] if r0.len() == 2 && r1.len() == 2 => QuadForm {
                        dim: 2,
                        m: [[r0[0], r0[1]], [r1[0], r1[1]]],
                    },
                    _ => return Err(Error::Config("matrix must be 1x1 or 2x2".into())),
                };
                HamiltonianSpec::quadratic(a, potential.build(), horizon)
            }
            HamiltonianConfig::Separable { convex, concave } => {
                HamiltonianSpec::separable(convex.build(horizon, 0.0)?, concave.build(horizon, 0.0)?, horizon)
            }
            HamiltonianConfig::CubicExample => HamiltonianSpec::cubic_example(horizon),
        };
        let h = h.with_shift(shift);
        h.validate()?;
        Ok(h)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatumConfig {
    Cos {
        #[serde(default = "one")]
        amp: f64,
        #[serde(default = "unit_wave")]
        wave: [f64; 2],
        #[serde(default)]
        phase: f64,
    },
    Sin {
        #[serde(default = "one")]
        amp: f64,
        #[serde(default = "unit_wave")]
        wave: [f64; 2],
        #[serde(default)]
        phase: f64,
    },
    ShiftedAbsSine {
        #[serde(default = "one")]
        amp: f64,
        #[serde(default = "unit_wave")]
        wave: [f64; 2],
        #[serde(default)]
        shift: f64,
    },
    PiecewiseLinear {
        xs: Vec<f64>,
        ys: Vec<f64>,
        #[serde(default)]
        period: Option<f64>,
    },
    Constant {
        value: f64,
    },
    Hat {
        center: f64,
        width: f64,
        height: f64,
    },
    CubicBranch {
        #[serde(default = "default_joint")]
        eps: f64,
    },
    /// `first(x1) + second(x2)`.
    Separable {
        first: Box<DatumConfig>,
        second: Box<DatumConfig>,
    },
    Table {
        grid: GridConfig,
        values: Vec<f64>,
    },
}

fn default_joint() -> f64 {
    0.1
}

impl DatumConfig {
    pub fn build(&self) -> Result<DatumSpec> {
        use crate::domain::Builtin;
        let d = match self {
            DatumConfig::Cos { amp, wave, phase } => DatumSpec::Builtin(Builtin::Cos {
                amp: *amp,
                wave: *wave,
                phase: *phase,
            }),
            DatumConfig::Sin { amp, wave, phase } => DatumSpec::Builtin(Builtin::Sin {
                amp: *amp,
                wave: *wave,
                phase: *phase,
            }),
            DatumConfig::ShiftedAbsSine { amp, wave, shift } => DatumSpec::Builtin(Builtin::ShiftedAbsSine {
                amp: *amp,
                wave: *wave,
                shift: *shift,
            }),
            DatumConfig::PiecewiseLinear { xs, ys, period } => DatumSpec::Builtin(Builtin::PiecewiseLinear {
                xs: xs.clone(),
                ys: ys.clone(),
                period: *period,
            }),
            DatumConfig::Constant { value } => DatumSpec::constant(*value),
            DatumConfig::Hat { center, width, height } => DatumSpec::hat(*center, *width, *height),
            DatumConfig::CubicBranch { eps } => DatumSpec::cubic_branch(*eps)?,
            DatumConfig::Separable { first, second } => DatumSpec::separable(first.build()?, second.build()?),
            DatumConfig::Table { grid, values } => DatumSpec::table(grid.build()?, values.clone())?,
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridConfig {
    /// `[0, 2 pi)^dim` with `n` points per axis.
    Torus {
        n: usize,
        #[serde(default = "one_dim")]
        dim: usize,
    },
    /// Closed segment `[lo, hi]` with `n` points.
    Line { lo: f64, hi: f64, n: usize },
    Axes { axes: Vec<Axis> },
}

fn one_dim() -> usize {
    1
}

impl GridConfig {
    pub fn build(&self) -> Result<SpaceGrid> {
        match self {
            GridConfig::Torus { n, dim: 1 } => SpaceGrid::torus1(*n),
            GridConfig::Torus { n, dim: 2 } => SpaceGrid::torus2(*n),
            GridConfig::Torus { dim, .. } => Err(Error::Config(format!("torus dimension must be 1 or 2, got {dim}"))),
            GridConfig::Line { lo, hi, n } => SpaceGrid::line1(*lo, *hi, *n),
            GridConfig::Axes { axes } => SpaceGrid::new(axes.clone()),
        }
    }
}

/// Overrides for the solver tolerances.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub minmax: Option<f64>,
    pub solver: Option<f64>,
    pub refine: Option<f64>,
    /// Sup-norm bound for `compare`.
    pub compare: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    #[default]
    Minmax,
    Viscosity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentTag,
    /// Name used in artifact file names; defaults to the experiment tag.
    #[serde(default)]
    pub tag: Option<String>,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianConfig>,
    /// Time horizon `T`; defaults to the largest instant (at least 1).
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Constant added to `H`.
    #[serde(default)]
    pub shift: f64,
    #[serde(default)]
    pub datum: Option<DatumConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub instants: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub method: SolveMethod,
    /// Also run the refined configuration (`compare`: doubled grid; `markov`: `N -> 2N + 1`).
    #[serde(default)]
    pub refine: bool,
    /// Mollifier widths for `c0`.
    #[serde(default)]
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub splitting: Option<SplittingConfig>,
}

/// A validated configuration with built domain objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub tag: String,
    pub hamiltonian: Option<HamiltonianSpec>,
    pub datum: Option<DatumSpec>,
    pub grid: Option<SpaceGrid>,
    pub solver: SolverConfig,
    pub compare_tolerance: f64,
    pub output: PathBuf,
}

/// Parse failure categories; each has its own diagnostic line.
#[derive(Debug)]
pub enum ConfigError {
    UnknownExperiment(String),
    Schema(String),
    Io(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::UnknownExperiment(t) => write!(
                f,
                "unknown experiment tag '{t}' (expected one of: {})",
                EXPERIMENTS.iter().map(|e| e.0).collect::<Vec<_>>().join(", ")
            ),
            ConfigError::Schema(m) => write!(f, "config schema violation: {m}"),
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
        }
    }
}

pub fn read_config(path: &Path) -> std::result::Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
    match value.get("experiment") {
        Some(serde_json::Value::String(s)) if ExperimentTag::parse(s).is_none() => {
            return Err(ConfigError::UnknownExperiment(s.clone()))
        }
        Some(serde_json::Value::String(_)) => {}
        Some(_) => return Err(ConfigError::Schema("'experiment' must be a string".into())),
        None => return Err(ConfigError::Schema("missing field 'experiment'".into())),
    }
    serde_json::from_value(value).map_err(|e| ConfigError::Schema(e.to_string()))
}

fn require<'a, T>(v: &'a Option<T>, name: &str, exp: ExperimentTag) -> std::result::Result<&'a T, ConfigError> {
    v.as_ref()
        .ok_or_else(|| ConfigError::Schema(format!("'{}' needs field '{name}'", exp.as_str())))
}

impl RunConfig {
    /// Checks experiment-specific fields and builds the domain objects.
    /// `out` and `seed` come from flags and take precedence over the file.
    pub fn resolve(self, out: Option<PathBuf>, seed: Option<u64>) -> std::result::Result<Resolved, ConfigError> {
        let exp = self.experiment;
        let schema = |e: Error| ConfigError::Schema(e.to_string());
        let instants = self.instants.clone();
        if instants.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(ConfigError::Schema("instants must be finite and nonnegative".into()));
        }
        let needed = match exp {
            ExperimentTag::Markov => Some(3),
            ExperimentTag::Hysteresis => Some(2),
            _ => None,
        };
        if let Some(k) = needed {
            if instants.len() != k {
                return Err(ConfigError::Schema(format!(
                    "'{}' needs exactly {k} instants, got {}",
                    exp.as_str(),
                    instants.len()
                )));
            }
        } else if instants.is_empty() {
            return Err(ConfigError::Schema(format!("'{}' needs at least one instant", exp.as_str())));
        }
        let t_max = instants.iter().cloned().fold(0.0, f64::max);
        let horizon = self.horizon.unwrap_or(t_max.max(1.0));
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ConfigError::Schema("horizon must be positive".into()));
        }
        if t_max > horizon {
            return Err(ConfigError::Schema(format!("instant {t_max} outside [0, {horizon}]")));
        }
        let (hamiltonian, datum, grid) = if exp == ExperimentTag::Splitting {
            (None, None, None)
        } else {
            let h = require(&self.hamiltonian, "hamiltonian", exp)?.build(horizon, self.shift).map_err(schema)?;
            let d = require(&self.datum, "datum", exp)?.build().map_err(schema)?;
            let g = require(&self.grid, "grid", exp)?.build().map_err(schema)?;
            if g.dim() != h.dim() {
                return Err(ConfigError::Schema(format!(
                    "grid dimension {} differs from Hamiltonian dimension {}",
                    g.dim(),
                    h.dim()
                )));
            }
            (Some(h), Some(d), Some(g))
        };
        if exp == ExperimentTag::C0 && self.schedule.len() < 2 {
            return Err(ConfigError::Schema("'c0' needs a schedule of at least two widths".into()));
        }
        if exp == ExperimentTag::Hopf && hamiltonian.as_ref().and_then(|h| h.split()).is_none() {
            return Err(ConfigError::Schema("'hopf' needs a separable Hamiltonian".into()));
        }
        let mut solver = self.solver.clone();
        if let Some(s) = seed.or(self.seed) {
            solver.seed = s;
        }
        if let Some(v) = self.tolerances.minmax {
            solver.tol_minmax = v;
        }
        if let Some(v) = self.tolerances.solver {
            solver.tol_solver = v;
        }
        if let Some(v) = self.tolerances.refine {
            solver.tol_refine = v;
        }
        let compare_tolerance = self.tolerances.compare.unwrap_or(0.05);
        let output = out.or_else(|| self.output.clone()).unwrap_or_else(|| PathBuf::from("."));
        let tag = self.tag.clone().unwrap_or_else(|| exp.as_str().to_string());
        if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(ConfigError::Schema(format!("tag '{tag}' must be nonempty [A-Za-z0-9_-]")));
        }
        Ok(Resolved {
            config: self,
            tag,
            hamiltonian,
            datum,
            grid,
            solver,
            compare_tolerance,
            output,
        })
    }
}
