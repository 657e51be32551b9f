//! Particle-level simulation of the branching walk with exact big-integer
//! counts, restricted processes, seed scanning and return estimates.
//!
//! All particles at one site branch together: the number choosing each atom
//! is multinomial (see [`multinomial`]), and offspring are deposited in bulk.
//! This is exact in distribution to independent per-particle draws.

pub mod induced;
pub mod multinomial;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::environment::{EnvironmentField, SiteLaw};
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site};
use crate::rng::{StreamFactory, StreamPurpose};

pub use induced::{InducedWalk, InducedWalkState};
pub use multinomial::{ln_biguint, SamplerStats};

pub const DEFAULT_BIT_BUDGET: u64 = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    /// Largest permitted bit length of the total population.
    pub bit_budget: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            bit_budget: DEFAULT_BIT_BUDGET,
        }
    }
}

/// Particle counts `η_n` at time `n` and their total `𝒵_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopulationState {
    pub time: usize,
    pub counts: BTreeMap<Site, BigUint>,
    pub total: BigUint,
}

impl PopulationState {
    /// One particle at `start`.
    pub fn initial(start: Site) -> PopulationState {
        let mut counts = BTreeMap::new();
        counts.insert(start, BigUint::one());
        PopulationState {
            time: 0,
            counts,
            total: BigUint::one(),
        }
    }

    pub fn count(&self, x: Site) -> BigUint {
        self.counts.get(&x).cloned().unwrap_or_default()
    }

    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn is_extinct(&self) -> bool {
        self.total.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<PopulationState>,
    pub stats: SamplerStats,
}

impl Trajectory {
    pub fn last(&self) -> &PopulationState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn branch_site<R: Rng + ?Sized>(
    law: &SiteLaw,
    x: Site,
    n: &BigUint,
    rng: &mut R,
    stats: &mut SamplerStats,
    next: &mut BTreeMap<Site, BigUint>,
    keep: &impl Fn(Site) -> bool,
) {
    let probs: Vec<f64> = law.atoms().iter().map(|a| a.prob).collect();
    let chosen = multinomial::multinomial(n, &probs, rng, stats);
    let offsets = law.step_set().offsets();
    for (atom, k) in law.atoms().iter().zip(chosen) {
        if k.is_zero() {
            continue;
        }
        for (y, &c) in atom.config.counts().iter().enumerate() {
            if c == 0 {
                continue;
            }
            let target = x + offsets[y];
            if keep(target) {
                *next.entry(target).or_default() += &k * c;
            }
        }
    }
}

fn step_restricted<R: Rng + ?Sized>(
    env: &EnvironmentField,
    state: &PopulationState,
    keep: &impl Fn(Site) -> bool,
    rng: &mut R,
    cfg: &SimulationConfig,
    stats: &mut SamplerStats,
) -> Result<PopulationState> {
    let mut next = BTreeMap::new();
    for (&x, n) in &state.counts {
        branch_site(env.site_law(x), x, n, rng, stats, &mut next, keep);
    }
    let total: BigUint = next.values().sum();
    if total.bits() > cfg.bit_budget {
        return Err(Error::CountOverflow {
            budget: cfg.bit_budget,
            time: state.time + 1,
        });
    }
    Ok(PopulationState {
        time: state.time + 1,
        counts: next,
        total,
    })
}

/// One generation of the unrestricted process.
pub fn step_population<R: Rng + ?Sized>(
    env: &EnvironmentField,
    state: &PopulationState,
    rng: &mut R,
    cfg: &SimulationConfig,
    stats: &mut SamplerStats,
) -> Result<PopulationState> {
    step_restricted(env, state, &|_| true, rng, cfg, stats)
}

/// The process with every particle placed outside `keep` deleted.
pub fn restricted_run<R: Rng + ?Sized>(
    env: &EnvironmentField,
    keep: impl Fn(Site) -> bool,
    start: Site,
    n: usize,
    rng: &mut R,
    cfg: &SimulationConfig,
) -> Result<Trajectory> {
    if !keep(start) {
        return Err(Error::InvalidArgument(format!(
            "start {} lies outside the restriction set",
            start.display(env.dim())
        )));
    }
    let mut stats = SamplerStats::default();
    let mut states = vec![PopulationState::initial(start)];
    for _ in 0..n {
        let next = step_restricted(env, states.last().unwrap(), &keep, rng, cfg, &mut stats)?;
        states.push(next);
    }
    Ok(Trajectory { states, stats })
}

/// `n + 1` states of the process started from one particle at `start`.
pub fn run<R: Rng + ?Sized>(
    env: &EnvironmentField,
    start: Site,
    n: usize,
    rng: &mut R,
    cfg: &SimulationConfig,
) -> Result<Trajectory> {
    restricted_run(env, |_| true, start, n, rng, cfg)
}

/// Independent replicas `0..replicas` on their branching streams, in parallel.
pub fn run_replicas(
    env: &EnvironmentField,
    start: Site,
    n: usize,
    replicas: u64,
    streams: &StreamFactory,
    cfg: &SimulationConfig,
) -> Result<Vec<Trajectory>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.stream(r, StreamPurpose::Branching);
            run(env, start, n, &mut rng, cfg)
        })
        .collect()
}

/// Empirical `ln η_n(x) / n` across runs with `η_n(x) ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalExponentStat {
    pub n: usize,
    pub x: Site,
    pub occupied_runs: usize,
    pub occupancy: f64,
    /// `NaN` when no run occupies the site.
    pub mean: f64,
    /// Normal 95% band around the mean.
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn realized_local_exponent(runs: &[Trajectory], sites: &[(usize, Site)]) -> Vec<LocalExponentStat> {
    sites
        .iter()
        .map(|&(n, x)| {
            let samples: Vec<f64> = runs
                .iter()
                .filter_map(|t| t.states.get(n))
                .filter_map(|s| s.counts.get(&x))
                .filter(|c| !c.is_zero())
                .map(|c| if n == 0 { 0.0 } else { ln_biguint(c) / n as f64 })
                .collect();
            let k = samples.len();
            let mean = if k == 0 {
                f64::NAN
            } else {
                samples.iter().sum::<f64>() / k as f64
            };
            let half = if k >= 2 {
                let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
                1.96 * (var / k as f64).sqrt()
            } else if k == 1 {
                0.0
            } else {
                f64::NAN
            };
            LocalExponentStat {
                n,
                x,
                occupied_runs: k,
                occupancy: if runs.is_empty() {
                    0.0
                } else {
                    k as f64 / runs.len() as f64
                },
                mean,
                ci_low: mean - half,
                ci_high: mean + half,
            }
        })
        .collect()
}

pub type LawPredicate = Box<dyn Fn(&SiteLaw) -> bool + Send + Sync>;

/// A pattern of constraints `H_x` on the laws at `z + x`, `x ∈ U`.
pub struct SeedSpec {
    entries: Vec<(Site, LawPredicate)>,
}

impl SeedSpec {
    pub fn new(entries: Vec<(Site, LawPredicate)>) -> Result<SeedSpec> {
        if !entries.iter().any(|(x, _)| *x == Site::ORIGIN) {
            return Err(Error::InvalidArgument("seed pattern must contain the origin".into()));
        }
        Ok(SeedSpec { entries })
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.entries.iter().map(|(x, _)| *x)
    }

    pub fn matches(&self, env: &EnvironmentField, z: Site) -> bool {
        self.entries.iter().all(|(x, h)| h(env.site_law(z + *x)))
    }
}

/// Centres `z` in `region` where the seed pattern is present.
pub fn seed_scan(env: &EnvironmentField, seed: &SeedSpec, region: &BoxRegion) -> Vec<Site> {
    region.iter().filter(|&z| seed.matches(env, z)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnEstimate {
    pub horizon: usize,
    pub replicas: u64,
    pub returns: u64,
    pub estimate: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    let z = 1.96f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Fraction of replicas in which some particle is back at `x` at a time in
/// `1..=horizon`. Each replica stops at its first return, so estimates for
/// nested horizons on the same streams are monotone.
pub fn estimate_return_probability(
    env: &EnvironmentField,
    x: Site,
    horizon: usize,
    replicas: u64,
    streams: &StreamFactory,
    cfg: &SimulationConfig,
) -> Result<ReturnEstimate> {
    if horizon == 0 || replicas == 0 {
        return Err(Error::InvalidArgument("horizon and replicas must be at least 1".into()));
    }
    let outcomes: Vec<bool> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let mut rng = streams.stream(r, StreamPurpose::ReturnEstimate);
            let mut stats = SamplerStats::default();
            let mut state = PopulationState::initial(x);
            for _ in 0..horizon {
                state = step_population(env, &state, &mut rng, cfg, &mut stats)?;
                if state.counts.contains_key(&x) {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect::<Result<_>>()?;
    let returns = outcomes.iter().filter(|&&b| b).count() as u64;
    let (ci_low, ci_high) = wilson(returns, replicas);
    Ok(ReturnEstimate {
        horizon,
        replicas,
        returns,
        estimate: returns as f64 / replicas as f64,
        ci_low,
        ci_high,
    })
}
