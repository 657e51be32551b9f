//! The uniform induced random walk: follow one uniformly chosen occupied
//! offset of the offspring configuration at every step.
//!
//! With `ε̂0 = ε0 / |𝔄|`, every unit step has kernel weight at least `ε̂0` at
//! every site, so a step can be drawn by first sampling `Ẑ ∈ {0, 1, .., 2d}`
//! independently of the environment (`P(Ẑ = j) = ε̂0` for `j ≥ 1`) and only
//! consulting the site when `Ẑ = 0`.

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::environment::{check_conditions, EnvironmentField, SiteLaw};
use crate::error::{Error, Result};
use crate::lattice::Site;

const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedWalkState {
    pub position: Site,
    pub step_count: usize,
    /// `Z_i`: step `i` was a forced unit step.
    pub forced_flags: Vec<bool>,
    /// `Ẑ_i ∈ {0, .., 2d}`; `j ≥ 1` names the unit step `ê_j` in the order
    /// `+e1, -e1, +e2, ..`.
    pub forced_symbols: Vec<u8>,
}

impl InducedWalkState {
    pub fn new(position: Site) -> InducedWalkState {
        InducedWalkState {
            position,
            step_count: 0,
            forced_flags: Vec::new(),
            forced_symbols: Vec::new(),
        }
    }

    fn advance(&mut self, offset: Site, symbol: u8) {
        self.position = self.position + offset;
        self.step_count += 1;
        self.forced_flags.push(symbol != 0);
        self.forced_symbols.push(symbol);
    }
}

/// The induced walk on a fixed environment together with its `ε̂0`.
#[derive(Clone, Debug)]
pub struct InducedWalk<'a> {
    env: &'a EnvironmentField,
    eps_hat: f64,
}

impl<'a> InducedWalk<'a> {
    /// Uses the environment's `ε0` from the condition check.
    pub fn new(env: &'a EnvironmentField) -> InducedWalk<'a> {
        let eps0 = check_conditions(env.spec()).epsilon0;
        InducedWalk::with_epsilon0(env, eps0)
    }

    /// Declares `ε0` explicitly. A value larger than the true one makes the
    /// residual kernel negative somewhere, which is reported on visit.
    pub fn with_epsilon0(env: &'a EnvironmentField, eps0: f64) -> InducedWalk<'a> {
        let eps_hat = eps0 / env.step_set().len() as f64;
        InducedWalk { env, eps_hat }
    }

    pub fn epsilon_hat(&self) -> f64 {
        self.eps_hat
    }

    /// Probability that a step is forced, `2d ε̂0`.
    pub fn forced_probability(&self) -> f64 {
        2.0 * self.env.dim() as f64 * self.eps_hat
    }

    /// Residual kernel at `x` over the step set offsets.
    pub fn residual_kernel(&self, x: Site) -> Result<Vec<f64>> {
        let law = self.env.site_law(x);
        residual_kernel(law, self.eps_hat, x, self.env.dim())
    }

    /// One step via the `Ẑ` decomposition.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut InducedWalkState, rng: &mut R) -> Result<()> {
        let step_set = self.env.step_set();
        let units = step_set.unit_indices();
        let u: f64 = rng.random();
        let forced = self.forced_probability();
        if u < forced || forced >= 1.0 - NEGATIVE_SLACK {
            let j = ((u / self.eps_hat) as usize).min(units.len() - 1);
            state.advance(step_set.offsets()[units[j]], (j + 1) as u8);
            return Ok(());
        }
        let residual = self.residual_kernel(state.position)?;
        let k = sample_index(&residual, rng);
        state.advance(step_set.offsets()[k], 0);
        Ok(())
    }

    /// One step drawn directly from `σ(x, ·)`; never marks a forced step.
    pub fn step_direct<R: Rng + ?Sized>(&self, state: &mut InducedWalkState, rng: &mut R) {
        let law = self.env.site_law(state.position);
        let k = sample_index(law.induced_kernel(), rng);
        state.advance(self.env.step_set().offsets()[k], 0);
    }

    pub fn walk<R: Rng + ?Sized>(&self, start: Site, steps: usize, rng: &mut R) -> Result<InducedWalkState> {
        let mut state = InducedWalkState::new(start);
        for _ in 0..steps {
            self.step(&mut state, rng)?;
        }
        Ok(state)
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    WeightedIndex::new(weights)
        .expect("kernel has positive mass")
        .sample(rng)
}

/// `(σ(ê_j) - ε̂0) / (1 - 2dε̂0)` on unit steps, `σ(y) / (1 - 2dε̂0)` elsewhere.
pub fn residual_kernel(law: &SiteLaw, eps_hat: f64, x: Site, dim: usize) -> Result<Vec<f64>> {
    let sigma = law.induced_kernel();
    let step_set = law.step_set();
    let scale = 1.0 - 2.0 * dim as f64 * eps_hat;
    let mut out = sigma.to_vec();
    for &u in step_set.unit_indices() {
        out[u] -= eps_hat;
    }
    for (k, v) in out.iter_mut().enumerate() {
        if *v < -NEGATIVE_SLACK {
            return Err(Error::NegativeResidual {
                site: format!("{} offset {}", x.display(dim), step_set.offsets()[k].display(dim)),
                value: *v,
            });
        }
        *v = v.max(0.0);
    }
    if scale <= NEGATIVE_SLACK {
        // Every step is forced; the residual is never sampled.
        return Ok(out.iter().map(|_| 0.0).collect());
    }
    for v in out.iter_mut() {
        *v /= scale;
    }
    Ok(out)
}
