//! The JSON experiment config and its validation.
//!
//! A config names one command and carries that command's parameters. All
//! numeric parameters are range-checked by [`ConfigDoc::validate`] before
//! anything runs; the ranges are listed on each field.

use std::path::PathBuf;

use brwre_core::environment::{EnvironmentDoc, EnvironmentSpec};
use brwre_core::rational::RationalPoint;
use brwre_core::Site;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MAX_WORKERS: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub environment: EnvironmentDoc,
    pub command: CommandDoc,
    pub output_dir: PathBuf,
    /// Worker threads, `1..=1024`. Defaults to the available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CommandDoc {
    Check,
    Solve(SolveParams),
    Shape(ShapeParams),
    Beta(BetaParams),
    Classify(ClassifyParams),
    Simulate(SimulateParams),
    Report,
}

impl CommandDoc {
    pub fn name(&self) -> &'static str {
        match self {
            CommandDoc::Check => "check",
            CommandDoc::Solve(_) => "solve",
            CommandDoc::Shape(_) => "shape",
            CommandDoc::Beta(_) => "beta",
            CommandDoc::Classify(_) => "classify",
            CommandDoc::Simulate(_) => "simulate",
            CommandDoc::Report => "report",
        }
    }

    /// The named command with default parameters.
    pub fn default_for(name: &str) -> Option<CommandDoc> {
        Some(match name {
            "check" => CommandDoc::Check,
            "solve" => CommandDoc::Solve(SolveParams::default()),
            "shape" => CommandDoc::Shape(ShapeParams::default()),
            "beta" => CommandDoc::Beta(BetaParams::default()),
            "classify" => CommandDoc::Classify(ClassifyParams::default()),
            "simulate" => CommandDoc::Simulate(SimulateParams::default()),
            "report" => CommandDoc::Report,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationDoc {
    Forward,
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerFormat {
    Csv,
    Binary,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    /// Anchor site (start for forward layers, target for adjoint layers).
    /// Empty means the origin.
    pub start: Vec<i64>,
    /// `0..=5000`.
    pub horizon: usize,
    pub orientation: OrientationDoc,
    pub format: LayerFormat,
    /// Write every `stride`-th layer (`1..=horizon`); only the last layer
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            start: Vec::new(),
            horizon: 50,
            orientation: OrientationDoc::Forward,
            format: LayerFormat::Csv,
            stride: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeParams {
    /// 1 to 32 thresholds, each in `[0, 1)`.
    pub deltas: Vec<f64>,
    /// `1..=2000` for d = 1, `1..=500` for d = 2, `1..=60` for d = 3.
    pub n: usize,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            deltas: vec![0.0],
            n: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaParams {
    /// Explicit directions such as `"1/2,-1/4"`, at most 4096. When absent
    /// the grid `{k / grid_denominator : ||k||_1 <= grid_radius}` is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<String>>,
    /// `1..=64`.
    pub grid_denominator: i64,
    /// `0..=grid_denominator * L0`, where `L0` is the longest step.
    pub grid_radius: i64,
    /// `2..=20000`.
    pub horizon: usize,
    /// Half-width of the inconclusive band around `β̂(0) = 0`, in `(0, 1]`.
    pub tol: f64,
}

impl Default for BetaParams {
    fn default() -> Self {
        BetaParams {
            directions: None,
            grid_denominator: 10,
            grid_radius: 8,
            horizon: 600,
            tol: brwre_core::growth::DEFAULT_BETA_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyParams {
    /// Verdict boundary half-width, in `(0, 0.1]`.
    pub tol: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            tol: brwre_core::classify::DEFAULT_CRITERION_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    /// Empty means the origin.
    pub start: Vec<i64>,
    /// `1..=1000`.
    pub horizon: usize,
    /// `1..=10_000_000`.
    pub replicas: u64,
    /// `64..=1_048_576`.
    pub bit_budget: u64,
    /// Sites whose counts go into the trajectory CSV, at most 64. Empty
    /// means the start site.
    pub track: Vec<Vec<i64>>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            start: Vec::new(),
            horizon: 50,
            replicas: 200,
            bit_budget: brwre_core::montecarlo::DEFAULT_BIT_BUDGET,
            track: Vec::new(),
        }
    }
}

/// Scalar fields that may be set from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub horizon: Option<usize>,
    pub replicas: Option<u64>,
}

fn check<T: PartialOrd + std::fmt::Display>(name: &str, v: T, lo: T, hi: T) -> CliResult<()> {
    if v < lo || v > hi {
        return Err(CliError::Config(format!("{name} = {v} is outside [{lo}, {hi}]")));
    }
    Ok(())
}

pub fn parse_site(coords: &[i64], dim: usize) -> CliResult<Site> {
    if coords.is_empty() {
        return Ok(Site::ORIGIN);
    }
    Site::from_vec(coords, dim).map_err(|e| CliError::Config(e.to_string()))
}

impl ConfigDoc {
    pub fn from_json(text: &str) -> CliResult<ConfigDoc> {
        let doc: ConfigDoc = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(doc)
    }

    /// Pretty JSON with fields in declaration order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with `output_dir` and `workers`
    /// cleared: neither changes any output.
    pub fn hash(&self) -> String {
        let mut key = self.clone();
        key.output_dir = PathBuf::new();
        key.workers = None;
        hex::encode(Sha256::digest(key.to_canonical_json().as_bytes()))
    }

    pub fn seed(&self) -> u64 {
        self.environment.seed
    }

    /// Flag values win over `BRWRE_SEED` (passed in as `env_seed`), which
    /// wins over the config file.
    pub fn apply_overrides(&mut self, o: &Overrides, env_seed: Option<&str>) -> CliResult<()> {
        if let Some(s) = env_seed {
            self.environment.seed = s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("BRWRE_SEED={s:?} is not a u64")))?;
        }
        if let Some(s) = o.seed {
            self.environment.seed = s;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        match &mut self.command {
            CommandDoc::Shape(p) => {
                if let Some(d) = &o.deltas {
                    p.deltas = d.clone();
                }
            }
            CommandDoc::Solve(p) => {
                if let Some(h) = o.horizon {
                    p.horizon = h;
                }
            }
            CommandDoc::Beta(p) => {
                if let Some(h) = o.horizon {
                    p.horizon = h;
                }
            }
            CommandDoc::Simulate(p) => {
                if let Some(h) = o.horizon {
                    p.horizon = h;
                }
                if let Some(r) = o.replicas {
                    p.replicas = r;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Checks the environment and every numeric parameter.
    pub fn validate(&self) -> CliResult<EnvironmentSpec> {
        let spec = self
            .environment
            .to_spec()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let dim = spec.dim();
        if let Some(w) = self.workers {
            check("workers", w, 1, MAX_WORKERS)?;
        }
        match &self.command {
            CommandDoc::Check | CommandDoc::Report => {}
            CommandDoc::Solve(p) => {
                parse_site(&p.start, dim)?;
                check("solve.horizon", p.horizon, 0, 5000)?;
                if let Some(s) = p.stride {
                    check("solve.stride", s, 1, p.horizon.max(1))?;
                }
            }
            CommandDoc::Shape(p) => {
                let n_max = [2000, 500, 60][dim - 1];
                check("shape.n", p.n, 1, n_max)?;
                check("number of shape.deltas", p.deltas.len(), 1, 32)?;
                for &d in &p.deltas {
                    if !(0.0..1.0).contains(&d) {
                        return Err(CliError::Config(format!("shape delta {d} is outside [0, 1)")));
                    }
                }
            }
            CommandDoc::Beta(p) => {
                check("beta.horizon", p.horizon, 2, 20000)?;
                if !(p.tol > 0.0 && p.tol <= 1.0) {
                    return Err(CliError::Config(format!("beta.tol = {} is outside (0, 1]", p.tol)));
                }
                match &p.directions {
                    Some(dirs) => {
                        check("number of beta.directions", dirs.len(), 1, 4096)?;
                        for a in dirs {
                            let a: RationalPoint = a
                                .parse()
                                .map_err(|e: brwre_core::Error| CliError::Config(e.to_string()))?;
                            if a.dim() != dim {
                                return Err(CliError::Config(format!(
                                    "direction {a} has dimension {}, environment has {dim}",
                                    a.dim()
                                )));
                            }
                        }
                    }
                    None => {
                        check("beta.grid_denominator", p.grid_denominator, 1, 64)?;
                        let reach = p.grid_denominator * spec.step_set.l0_max();
                        check("beta.grid_radius", p.grid_radius, 0, reach)?;
                    }
                }
            }
            CommandDoc::Classify(p) => {
                if !(p.tol > 0.0 && p.tol <= 0.1) {
                    return Err(CliError::Config(format!("classify.tol = {} is outside (0, 0.1]", p.tol)));
                }
            }
            CommandDoc::Simulate(p) => {
                parse_site(&p.start, dim)?;
                check("simulate.horizon", p.horizon, 1, 1000)?;
                check("simulate.replicas", p.replicas, 1, 10_000_000)?;
                check("simulate.bit_budget", p.bit_budget, 64, 1 << 20)?;
                check("number of simulate.track sites", p.track.len(), 0, 64)?;
                for t in &p.track {
                    parse_site(t, dim)?;
                }
            }
        }
        Ok(spec)
    }
}
