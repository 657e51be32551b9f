//! JSON artifacts shared by the commands that write them and `report`.
//!
//! Non-finite values are stored as `null`.

use serde::{Deserialize, Serialize};

pub const CONDITIONS_JSON: &str = "conditions.json";
pub const SHAPE_JSON: &str = "shape.json";
pub const BETA_JSON: &str = "beta.json";
pub const BETA_PROFILE_CSV: &str = "beta_profile.csv";
pub const BETA_SAMPLES_CSV: &str = "beta_samples.csv";
pub const B_HULL_CSV: &str = "b_hull.csv";
pub const TOTAL_GROWTH_CSV: &str = "total_growth.csv";
pub const CLASSIFY_JSON: &str = "classify.json";
pub const SIMULATE_JSON: &str = "simulate.json";
pub const TRAJECTORIES_CSV: &str = "trajectories.csv";
pub const SOLVE_JSON: &str = "solve.json";

/// Inputs `report` insists on, in the order they are listed when missing.
pub const REPORT_INPUTS: &[&str] = &[
    CONDITIONS_JSON,
    SHAPE_JSON,
    BETA_JSON,
    BETA_PROFILE_CSV,
    B_HULL_CSV,
    TOTAL_GROWTH_CSV,
    CLASSIFY_JSON,
    SIMULATE_JSON,
    TRAJECTORIES_CSV,
];

pub const SUMMARY_TXT: &str = "summary.txt";
pub const SHAPE_SVG: &str = "shape_hulls.svg";
pub const BETA_SVG: &str = "beta_profile.svg";
pub const B_HULL_SVG: &str = "b_hull.svg";
pub const GROWTH_SVG: &str = "growth_trace.svg";

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionsArtifact {
    pub holds_b: bool,
    pub holds_ue: bool,
    pub epsilon0: Option<f64>,
    pub holds_d: bool,
    pub d0: Option<f64>,
    pub holds_a: bool,
    pub aperiodic_witness: Option<WitnessDoc>,
    pub rho: i64,
    pub all_hold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub offset: Vec<i64>,
    pub counts: Vec<u32>,
    pub law: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeArtifact {
    pub dim: usize,
    pub n: usize,
    pub radius: i64,
    pub entries: Vec<ShapeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub delta: f64,
    pub sites: usize,
    pub boundary_contact: bool,
    /// Vertices of the hull of `W(n)/n`; absent in three dimensions.
    pub hull: Option<Vec<Vec<f64>>>,
    pub hausdorff_to_unit_ball: Option<f64>,
    pub hull_csv: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaArtifact {
    pub dim: usize,
    pub horizon: usize,
    pub tol: f64,
    pub directions: usize,
    pub beta0: Option<f64>,
    /// `recurrent`, `transient`, `inconclusive`, or `unavailable` when the
    /// origin is not on the grid.
    pub verdict: String,
    pub sup_beta: Option<f64>,
    pub b_hull: Vec<Vec<f64>>,
    pub concavity_defect: Option<f64>,
    /// `ln E 𝒵_n / n` at `n = horizon`.
    pub log_expected_total_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyArtifact {
    /// The criterion needs an i.i.d. environment.
    pub applicable: bool,
    /// `transient`, `recurrent`, `boundary`, or `not_applicable`.
    pub verdict: String,
    pub tol: f64,
    pub value: Option<f64>,
    pub log_value: Option<f64>,
    pub t_star: Vec<f64>,
    pub witness_law: Option<usize>,
    pub gradient_norm: Option<f64>,
    pub on_boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerDoc {
    pub exact_draws: u64,
    pub normal_draws: u64,
    pub poisson_draws: u64,
    pub max_berry_esseen: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackedSite {
    pub site: Vec<i64>,
    pub occupied_runs: u64,
    pub occupancy: f64,
    /// `ln η_n(x) / n` at the horizon over occupying runs.
    pub exponent: Band,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateArtifact {
    pub start: Vec<i64>,
    pub horizon: usize,
    pub replicas: u64,
    pub master_seed: u64,
    pub bit_budget: u64,
    pub sampler: SamplerDoc,
    pub extinct_runs: u64,
    /// `ln 𝒵_n / n` at the horizon over surviving runs.
    pub log_total_rate: Band,
    pub tracked: Vec<TrackedSite>,
}
