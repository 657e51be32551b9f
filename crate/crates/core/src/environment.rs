//! Offspring laws, random environments and the standing conditions.
//!
//! An environment assigns to every site `x` a law `ω_x` on offspring
//! configurations. Fields here are never stored: the law at a site is a pure
//! function of the master seed and the coordinates of a finite window of
//! cells, so any region can be evaluated lazily and reproducibly. Sites whose
//! windows are disjoint receive independent laws, which makes the dependence
//! range `ρ` explicit.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_dimension, Site, StepSet};

const PROB_TOL: f64 = 1e-12;

/// Offspring counts `v_y` per offset, aligned with the step set order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OffspringConfig {
    counts: Vec<u32>,
    total: u32,
}

impl OffspringConfig {
    pub fn new(counts: Vec<u32>) -> Result<OffspringConfig> {
        let total: u32 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidSpec(
                "offspring configuration must have at least one child".into(),
            ));
        }
        Ok(OffspringConfig { counts, total })
    }

    /// Builds a configuration from `(offset, count)` pairs.
    pub fn from_pairs(step_set: &StepSet, pairs: &[(Site, u32)]) -> Result<OffspringConfig> {
        let mut counts = vec![0; step_set.len()];
        for (offset, c) in pairs {
            let idx = step_set.index_of(offset).ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "offset {} is not in the step set",
                    offset.display(step_set.dim())
                ))
            })?;
            counts[idx] += c;
        }
        OffspringConfig::new(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    /// Number of distinct offsets receiving at least one child.
    pub fn occupied_offsets(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub config: OffspringConfig,
    pub prob: f64,
}

/// A finitely supported law on offspring configurations at one site.
#[derive(Clone, Debug)]
pub struct SiteLaw {
    step_set: Arc<StepSet>,
    atoms: Vec<Atom>,
    mean_offspring: Vec<f64>,
    mean_total: f64,
    send_prob: Vec<f64>,
    induced_kernel: Vec<f64>,
    log_mean: Vec<f64>,
}

impl PartialEq for SiteLaw {
    fn eq(&self, other: &Self) -> bool {
        self.step_set == other.step_set && self.atoms == other.atoms
    }
}

impl SiteLaw {
    pub fn new(step_set: Arc<StepSet>, atoms: Vec<(OffspringConfig, f64)>) -> Result<SiteLaw> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpec("site law needs at least one atom".into()));
        }
        let k = step_set.len();
        let mut sum = 0.0;
        for (cfg, p) in &atoms {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidSpec(format!("atom probability {p} outside [0,1]")));
            }
            if cfg.counts.len() != k {
                return Err(Error::InvalidSpec("atom does not match the step set".into()));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidSpec(format!(
                "atom probabilities sum to {sum}, not 1"
            )));
        }
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(config, prob)| Atom { config, prob })
            .collect();

        let mut mean_offspring = vec![0.0; k];
        let mut send_prob = vec![0.0; k];
        let mut induced_kernel = vec![0.0; k];
        for atom in &atoms {
            let occupied = atom.config.occupied_offsets() as f64;
            for (y, &c) in atom.config.counts.iter().enumerate() {
                mean_offspring[y] += atom.prob * c as f64;
                if c > 0 {
                    send_prob[y] += atom.prob;
                    induced_kernel[y] += atom.prob / occupied;
                }
            }
        }
        let mean_total = mean_offspring.iter().sum();
        let log_mean = mean_offspring.iter().map(|m| m.ln()).collect();
        Ok(SiteLaw {
            step_set,
            atoms,
            mean_offspring,
            mean_total,
            send_prob,
            induced_kernel,
            log_mean,
        })
    }

    pub fn point_mass(step_set: Arc<StepSet>, config: OffspringConfig) -> Result<SiteLaw> {
        SiteLaw::new(step_set, vec![(config, 1.0)])
    }

    /// The classical two-stage law: a particle is replaced by `i` children with
    /// probability `branching[i]`, each child then jumps independently with
    /// the step distribution `p` (aligned with the step set).
    pub fn multinomial_mixture(
        step_set: Arc<StepSet>,
        branching: &[(u32, f64)],
        p: &[f64],
    ) -> Result<SiteLaw> {
        let k = step_set.len();
        if p.len() != k {
            return Err(Error::InvalidSpec("jump distribution does not match step set".into()));
        }
        let psum: f64 = p.iter().sum();
        if (psum - 1.0).abs() > PROB_TOL || p.iter().any(|&q| q < 0.0) {
            return Err(Error::InvalidSpec(format!("jump distribution sums to {psum}")));
        }
        let mut atoms = Vec::new();
        for &(children, r) in branching {
            if children == 0 {
                return Err(Error::InvalidSpec("branching into zero children".into()));
            }
            if r == 0.0 {
                continue;
            }
            let mut counts = vec![0u32; k];
            enumerate_compositions(children, 0, &mut counts, &mut |c| {
                let prob = r * multinomial_pmf(children, c, p);
                if prob > 0.0 {
                    atoms.push((OffspringConfig::new(c.to_vec()).expect("children > 0"), prob));
                }
            });
        }
        // Renormalise away the rounding of the multinomial coefficients.
        let total: f64 = atoms.iter().map(|(_, q)| q).sum();
        for (_, q) in atoms.iter_mut() {
            *q /= total;
        }
        SiteLaw::new(step_set, atoms)
    }

    /// Convex combination of laws over the same step set.
    pub fn mixture(parts: &[(f64, &SiteLaw)]) -> Result<SiteLaw> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidSpec("empty mixture".into()))?;
        let step_set = first.1.step_set.clone();
        let mut atoms = Vec::new();
        for (w, law) in parts {
            if law.step_set != step_set {
                return Err(Error::InvalidSpec("mixture of laws over different step sets".into()));
            }
            for a in &law.atoms {
                atoms.push((a.config.clone(), w * a.prob));
            }
        }
        SiteLaw::new(step_set, atoms)
    }

    pub fn step_set(&self) -> &Arc<StepSet> {
        &self.step_set
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `μ_y = Σ_v ω(v) v_y`, aligned with the step set.
    pub fn mean_offspring(&self) -> &[f64] {
        &self.mean_offspring
    }

    pub fn mean_total(&self) -> f64 {
        self.mean_total
    }

    /// `ln μ_y` (`-∞` where nothing is sent).
    pub fn log_mean_offspring(&self) -> &[f64] {
        &self.log_mean
    }

    /// `ω(v : v_y ≥ 1)` for every offset `y`.
    pub fn send_probability(&self) -> &[f64] {
        &self.send_prob
    }

    /// Transition kernel of the uniform induced walk: follow one child chosen
    /// uniformly among the occupied offsets of the realised configuration.
    pub fn induced_kernel(&self) -> &[f64] {
        &self.induced_kernel
    }

    pub fn has_branching(&self) -> bool {
        self.atoms.iter().any(|a| a.prob > 0.0 && a.config.total >= 2)
    }
}

/// `μ_y = Σ_v ω(v) v_y`.
pub fn mean_offspring(law: &SiteLaw) -> &[f64] {
    law.mean_offspring()
}

fn enumerate_compositions(remaining: u32, pos: usize, buf: &mut [u32], f: &mut impl FnMut(&[u32])) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        f(buf);
        buf[pos] = 0;
        return;
    }
    for c in 0..=remaining {
        buf[pos] = c;
        enumerate_compositions(remaining - c, pos + 1, buf, f);
    }
    buf[pos] = 0;
}

fn multinomial_pmf(n: u32, counts: &[u32], p: &[f64]) -> f64 {
    let mut log_coef = ln_factorial(n);
    let mut log_p = 0.0;
    for (&c, &q) in counts.iter().zip(p) {
        if c > 0 {
            if q == 0.0 {
                return 0.0;
            }
            log_coef -= ln_factorial(c);
            log_p += c as f64 * q.ln();
        }
    }
    (log_coef + log_p).exp()
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// How the per-site laws depend on each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dependence {
    /// One independent draw per site (`ρ = 1`).
    Iid,
    /// `ω_x` is a function of i.i.d. cell uniforms on the l1-window of the
    /// given radius around `x` (`ρ = 2w + 1`).
    BlockWindow { window_radius: u32 },
}

impl Dependence {
    pub fn rho(&self) -> i64 {
        match self {
            Dependence::Iid => 1,
            Dependence::BlockWindow { window_radius } => 2 * *window_radius as i64 + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentSpec {
    pub step_set: Arc<StepSet>,
    /// Finite support of the marginal law of `ω_0`.
    pub laws: Vec<SiteLaw>,
    pub weights: Vec<f64>,
    pub dependence: Dependence,
    pub master_seed: u64,
}

impl EnvironmentSpec {
    pub fn new(
        step_set: Arc<StepSet>,
        laws: Vec<SiteLaw>,
        weights: Vec<f64>,
        dependence: Dependence,
        master_seed: u64,
    ) -> Result<EnvironmentSpec> {
        let spec = EnvironmentSpec {
            step_set,
            laws,
            weights,
            dependence,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Every site carries the same law.
    pub fn homogeneous(law: SiteLaw) -> EnvironmentSpec {
        EnvironmentSpec {
            step_set: law.step_set.clone(),
            laws: vec![law],
            weights: vec![1.0],
            dependence: Dependence::Iid,
            master_seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.step_set.dim()
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.step_set.dim())?;
        if self.laws.is_empty() {
            return Err(Error::InvalidSpec("law support is empty".into()));
        }
        if self.laws.len() != self.weights.len() {
            return Err(Error::InvalidSpec(format!(
                "{} laws but {} weights",
                self.laws.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidSpec("weights must lie in [0,1]".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidSpec(format!("weights sum to {sum}, not 1")));
        }
        if self.laws.iter().any(|l| *l.step_set != *self.step_set) {
            return Err(Error::InvalidSpec("every law must use the environment step set".into()));
        }
        Ok(())
    }

    /// Laws with positive weight.
    pub fn essential_support(&self) -> impl Iterator<Item = (usize, &SiteLaw)> {
        self.laws
            .iter()
            .enumerate()
            .filter(|(i, _)| self.weights[*i] > 0.0)
    }

    pub fn from_json(text: &str) -> Result<EnvironmentSpec> {
        let doc: EnvironmentDoc = serde_json::from_str(text)?;
        doc.to_spec()
    }

    pub fn to_doc(&self) -> EnvironmentDoc {
        let d = self.dim();
        let offsets = self.step_set.offsets();
        EnvironmentDoc {
            dimension: d,
            step_set: offsets.iter().map(|o| o.coords(d).to_vec()).collect(),
            laws: self
                .laws
                .iter()
                .map(|law| LawDoc {
                    atoms: law
                        .atoms
                        .iter()
                        .map(|a| AtomDoc {
                            counts: a
                                .config
                                .counts
                                .iter()
                                .zip(offsets)
                                .filter(|(c, _)| **c > 0)
                                .map(|(c, o)| (o.display(d), *c))
                                .collect(),
                            p: a.prob,
                        })
                        .collect(),
                })
                .collect(),
            weights: self.weights.clone(),
            dependence: match self.dependence {
                Dependence::Iid => DependenceDoc {
                    mode: DependenceMode::Iid,
                    window_radius: None,
                },
                Dependence::BlockWindow { window_radius } => DependenceDoc {
                    mode: DependenceMode::BlockWindow,
                    window_radius: Some(window_radius),
                },
            },
            seed: self.master_seed,
        }
    }
}

/// JSON form of an [`EnvironmentSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDoc {
    pub dimension: usize,
    pub step_set: Vec<Vec<i64>>,
    pub laws: Vec<LawDoc>,
    pub weights: Vec<f64>,
    pub dependence: DependenceDoc,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawDoc {
    pub atoms: Vec<AtomDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    /// Offset written as `"(dx,dy,...)"` → number of children sent there.
    pub counts: BTreeMap<String, u32>,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceMode {
    Iid,
    BlockWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependenceDoc {
    pub mode: DependenceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<u32>,
}

impl EnvironmentDoc {
    pub fn to_spec(&self) -> Result<EnvironmentSpec> {
        let d = self.dimension;
        check_dimension(d)?;
        let offsets = self
            .step_set
            .iter()
            .map(|o| Site::from_vec(o, d))
            .collect::<Result<Vec<_>>>()?;
        let step_set = Arc::new(StepSet::new(d, offsets)?);
        let mut laws = Vec::with_capacity(self.laws.len());
        for law in &self.laws {
            let mut atoms = Vec::with_capacity(law.atoms.len());
            for atom in &law.atoms {
                let pairs = atom
                    .counts
                    .iter()
                    .map(|(k, c)| Ok((Site::parse(k, d)?, *c)))
                    .collect::<Result<Vec<_>>>()?;
                atoms.push((OffspringConfig::from_pairs(&step_set, &pairs)?, atom.p));
            }
            laws.push(SiteLaw::new(step_set.clone(), atoms)?);
        }
        let dependence = match (self.dependence.mode, self.dependence.window_radius) {
            (DependenceMode::Iid, None | Some(0)) => Dependence::Iid,
            (DependenceMode::Iid, Some(w)) => {
                return Err(Error::InvalidSpec(format!(
                    "iid mode does not take a window radius (got {w})"
                )))
            }
            (DependenceMode::BlockWindow, Some(w)) => Dependence::BlockWindow { window_radius: w },
            (DependenceMode::BlockWindow, None) => {
                return Err(Error::InvalidSpec("block_window mode needs window_radius".into()))
            }
        };
        EnvironmentSpec::new(step_set, laws, self.weights.clone(), dependence, self.seed)
    }
}

#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const ENV_SALT: u64 = 0x656E_7669_726F_6E6D;

/// Uniform in `[0,1)` attached to a lattice cell.
#[inline]
fn cell_uniform(seed: u64, cell: &Site) -> f64 {
    let mut h = splitmix64(seed ^ ENV_SALT);
    for (i, &c) in cell.0.iter().enumerate() {
        h = splitmix64(h ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15 ^ (i as u64 + 1)));
    }
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A realised environment: a pure function from sites to laws.
#[derive(Clone, Debug)]
pub struct EnvironmentField {
    spec: Arc<EnvironmentSpec>,
    cumulative: Vec<f64>,
    window: Vec<Site>,
}

/// Validates the spec and builds the lazily evaluated field.
pub fn build_environment(spec: EnvironmentSpec) -> Result<EnvironmentField> {
    EnvironmentField::new(spec)
}

impl EnvironmentField {
    pub fn new(spec: EnvironmentSpec) -> Result<EnvironmentField> {
        spec.validate()?;
        let mut acc = 0.0;
        let cumulative = spec
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let window = match spec.dependence {
            Dependence::Iid => vec![Site::ORIGIN],
            Dependence::BlockWindow { window_radius } => {
                l1_ball(spec.dim(), window_radius as i64)
            }
        };
        Ok(EnvironmentField {
            spec: Arc::new(spec),
            cumulative,
            window,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn step_set(&self) -> &StepSet {
        &self.spec.step_set
    }

    pub fn laws(&self) -> &[SiteLaw] {
        &self.spec.laws
    }

    pub fn rho(&self) -> i64 {
        self.spec.dependence.rho()
    }

    /// Cells whose uniforms determine `ω_x`.
    pub fn seed_window(&self, x: Site) -> Vec<Site> {
        self.window.iter().map(|&c| x + c).collect()
    }

    /// Uniform driving the inverse-CDF draw at `x`.
    pub fn mixing_uniform(&self, x: Site) -> f64 {
        let seed = self.spec.master_seed;
        match self.spec.dependence {
            Dependence::Iid => cell_uniform(seed, &x),
            Dependence::BlockWindow { .. } => {
                let s: f64 = self.window.iter().map(|&c| cell_uniform(seed, &(x + c))).sum();
                s.fract()
            }
        }
    }

    /// Index into the law support of `ω_x`.
    pub fn law_index(&self, x: Site) -> usize {
        if self.cumulative.len() == 1 {
            return 0;
        }
        let u = self.mixing_uniform(x);
        match self.cumulative.iter().position(|&c| u < c) {
            Some(i) => i,
            None => self
                .spec
                .weights
                .iter()
                .rposition(|&w| w > 0.0)
                .unwrap_or(self.cumulative.len() - 1),
        }
    }

    pub fn site_law(&self, x: Site) -> &SiteLaw {
        &self.spec.laws[self.law_index(x)]
    }
}

/// The law at `x`.
pub fn site_law(env: &EnvironmentField, x: Site) -> &SiteLaw {
    env.site_law(x)
}

/// All `c` with `||c||_1 <= r`, in sorted order.
pub fn l1_ball(dim: usize, r: i64) -> Vec<Site> {
    let mut out = Vec::new();
    let range = -r..=r;
    match dim {
        1 => out.extend(range.map(|a| Site::new(&[a]))),
        2 => {
            for a in range.clone() {
                for b in range.clone() {
                    out.push(Site::new(&[a, b]));
                }
            }
        }
        _ => {
            for a in range.clone() {
                for b in range.clone() {
                    for c in range.clone() {
                        out.push(Site::new(&[a, b, c]));
                    }
                }
            }
        }
    }
    out.retain(|s| s.l1() <= r);
    out
}

/// The `(x, v)` pair of the aperiodicity condition: `v_x ≥ 1` with `||x||`
/// even.
#[derive(Clone, Debug, PartialEq)]
pub struct AperiodicWitness {
    pub offset: Site,
    pub config: OffspringConfig,
    pub law: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub holds_b: bool,
    pub holds_ue: bool,
    pub epsilon0: f64,
    pub holds_d: bool,
    pub d0: f64,
    pub holds_a: bool,
    pub aperiodic_witness: Option<AperiodicWitness>,
    pub rho: i64,
}

pub fn check_conditions(spec: &EnvironmentSpec) -> ConditionReport {
    let units = spec.step_set.unit_indices();
    let mut holds_b = false;
    let mut epsilon0 = f64::INFINITY;
    let mut d0: f64 = 0.0;
    let mut witness = None;
    for (i, law) in spec.essential_support() {
        holds_b |= law.has_branching();
        for &u in units {
            epsilon0 = epsilon0.min(law.send_probability()[u]);
        }
        d0 = d0.max(law.mean_total());
        if witness.is_none() {
            'atoms: for atom in law.atoms().iter().filter(|a| a.prob > 0.0) {
                for (y, &c) in atom.config.counts().iter().enumerate() {
                    let offset = spec.step_set.offsets()[y];
                    if c >= 1 && offset.l1() % 2 == 0 {
                        witness = Some(AperiodicWitness {
                            offset,
                            config: atom.config.clone(),
                            law: i,
                        });
                        break 'atoms;
                    }
                }
            }
        }
    }
    if !epsilon0.is_finite() {
        epsilon0 = 0.0;
    }
    ConditionReport {
        holds_b,
        holds_ue: epsilon0 > 0.0,
        epsilon0,
        holds_d: d0.is_finite(),
        d0,
        holds_a: witness.is_some(),
        aperiodic_witness: witness,
        rho: spec.dependence.rho(),
    }
}

/// Whether `ω(v) > δ` for the witness configuration `v`.
pub fn is_delta_aperiodic(law: &SiteLaw, delta: f64, witness: &AperiodicWitness) -> bool {
    let mass: f64 = law
        .atoms()
        .iter()
        .filter(|a| a.config == witness.config)
        .map(|a| a.prob)
        .sum();
    mass > delta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn(d: usize) -> Arc<StepSet> {
        Arc::new(StepSet::nearest_neighbor(d).unwrap())
    }

    fn cfg(s: &StepSet, pairs: &[(&[i64], u32)]) -> OffspringConfig {
        let pairs: Vec<(Site, u32)> = pairs.iter().map(|(o, c)| (Site::new(o), *c)).collect();
        OffspringConfig::from_pairs(s, &pairs).unwrap()
    }

    #[test]
    fn mean_offspring_of_point_mass() {
        let s = nn(1);
        let law = SiteLaw::point_mass(s.clone(), cfg(&s, &[(&[1], 1)])).unwrap();
        let plus = s.index_of(&Site::new(&[1])).unwrap();
        let minus = s.index_of(&Site::new(&[-1])).unwrap();
        assert_eq!(law.mean_offspring()[plus], 1.0);
        assert_eq!(law.mean_offspring()[minus], 0.0);
    }

    #[test]
    fn mean_offspring_of_two_atom_law() {
        let s = nn(1);
        let law = SiteLaw::new(s.clone(), vec![
            (cfg(&s, &[(&[1], 1)]), 0.5),
            (cfg(&s, &[(&[1], 1), (&[-1], 1)]), 0.5),
        ])
        .unwrap();
        let plus = s.index_of(&Site::new(&[1])).unwrap();
        let minus = s.index_of(&Site::new(&[-1])).unwrap();
        assert_eq!(law.mean_offspring()[plus], 1.0);
        assert_eq!(law.mean_offspring()[minus], 0.5);
        assert_eq!(law.mean_total(), 1.5);
    }

    #[test]
    fn multinomial_mixture_mean() {
        let s = nn(1);
        let plus = s.index_of(&Site::new(&[1])).unwrap();
        let mut p = vec![0.0; 2];
        p[plus] = 0.8;
        p[1 - plus] = 0.2;
        let law = SiteLaw::multinomial_mixture(s, &[(2, 1.0)], &p).unwrap();
        assert!((law.mean_offspring()[plus] - 1.6).abs() < 1e-12);
        assert_eq!(law.atoms().len(), 3);
    }

    #[test]
    fn invalid_laws_rejected() {
        let s = nn(1);
        let c = cfg(&s, &[(&[1], 1)]);
        assert!(SiteLaw::new(s.clone(), vec![(c.clone(), 0.7)]).is_err());
        assert!(SiteLaw::new(s.clone(), vec![(c.clone(), 1.2), (c, -0.2)]).is_err());
        assert!(OffspringConfig::new(vec![0, 0]).is_err());
    }

    #[test]
    fn bad_weights_rejected() {
        let s = nn(1);
        let law = SiteLaw::point_mass(s.clone(), cfg(&s, &[(&[1], 1), (&[-1], 1)])).unwrap();
        let err = EnvironmentSpec::new(s, vec![law.clone(), law], vec![0.5, 0.6], Dependence::Iid, 1);
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn conditions_for_pure_drift() {
        let s = nn(1);
        let law = SiteLaw::point_mass(s.clone(), cfg(&s, &[(&[1], 1)])).unwrap();
        let r = check_conditions(&EnvironmentSpec::homogeneous(law));
        assert!(!r.holds_b);
        assert!(!r.holds_ue);
        assert_eq!(r.epsilon0, 0.0);
        assert!(!r.holds_a);
        assert_eq!(r.rho, 1);
    }

    #[test]
    fn conditions_for_symmetric_branching() {
        let s = nn(1);
        let law = SiteLaw::new(s.clone(), vec![
            (cfg(&s, &[(&[1], 1), (&[-1], 1)]), 0.5),
            (cfg(&s, &[(&[1], 1)]), 0.25),
            (cfg(&s, &[(&[-1], 1)]), 0.25),
        ])
        .unwrap();
        let r = check_conditions(&EnvironmentSpec::homogeneous(law));
        assert!(r.holds_b);
        assert!(r.holds_ue);
        assert!((r.epsilon0 - 0.75).abs() < 1e-12);
        assert!((r.d0 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn aperiodic_witness_on_diagonal() {
        let s = Arc::new(
            StepSet::new(2, vec![
                Site::new(&[1, 0]),
                Site::new(&[-1, 0]),
                Site::new(&[0, 1]),
                Site::new(&[0, -1]),
                Site::new(&[1, 1]),
            ])
            .unwrap(),
        );
        let diag = cfg(&s, &[(&[1, 1], 1)]);
        let law = SiteLaw::new(s.clone(), vec![
            (diag.clone(), 0.2),
            (cfg(&s, &[(&[1, 0], 1), (&[-1, 0], 1), (&[0, 1], 1), (&[0, -1], 1)]), 0.8),
        ])
        .unwrap();
        let r = check_conditions(&EnvironmentSpec::homogeneous(law.clone()));
        assert!(r.holds_a);
        let w = r.aperiodic_witness.unwrap();
        assert_eq!(w.offset, Site::new(&[1, 1]));
        assert_eq!(w.config, diag);
        assert!(is_delta_aperiodic(&law, 0.1, &w));
        assert!(!is_delta_aperiodic(&law, 0.2, &w));
    }

    #[test]
    fn delta_aperiodic_strict() {
        let s = nn(1);
        let a = cfg(&s, &[(&[1], 1)]);
        let b = cfg(&s, &[(&[-1], 1)]);
        let law = SiteLaw::new(s.clone(), vec![(a.clone(), 0.3), (b, 0.7)]).unwrap();
        let w = AperiodicWitness { offset: Site::new(&[1]), config: a, law: 0 };
        assert!(is_delta_aperiodic(&law, 0.1, &w));
        assert!(!is_delta_aperiodic(&law, 0.3, &w));
        let absent = AperiodicWitness {
            offset: Site::new(&[1]),
            config: cfg(&s, &[(&[1], 2)]),
            law: 0,
        };
        assert!(!is_delta_aperiodic(&law, 0.0, &absent));
    }

    #[test]
    fn window_shapes() {
        assert_eq!(l1_ball(1, 1).len(), 3);
        assert_eq!(l1_ball(2, 1).len(), 5);
        assert_eq!(l1_ball(3, 1).len(), 7);
        assert_eq!(l1_ball(2, 2).len(), 13);
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{
            "dimension": 1,
            "step_set": [[1], [-1]],
            "laws": [
                {"atoms": [{"counts": {"(1)": 1, "(-1)": 1}, "p": 0.5}, {"counts": {"(1)": 1}, "p": 0.5}]},
                {"atoms": [{"counts": {"(-1)": 2}, "p": 1.0}]}
            ],
            "weights": [0.25, 0.75],
            "dependence": {"mode": "block_window", "window_radius": 2},
            "seed": 42
        }"#;
        let spec = EnvironmentSpec::from_json(text).unwrap();
        assert_eq!(spec.dependence, Dependence::BlockWindow { window_radius: 2 });
        assert_eq!(spec.dependence.rho(), 5);
        let doc = spec.to_doc();
        let again = doc.to_spec().unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let text = r#"{"dimension": 1, "step_set": [[1],[-1]], "laws": [], "weights": [],
            "dependence": {"mode": "iid"}, "seed": 1, "extra": true}"#;
        assert!(EnvironmentSpec::from_json(text).is_err());
        let text = r#"{"dimension": 4, "step_set": [[1,0,0,0]], "laws": [], "weights": [],
            "dependence": {"mode": "iid"}, "seed": 1}"#;
        assert!(matches!(
            EnvironmentSpec::from_json(text),
            Err(Error::UnsupportedDimension(4))
        ));
    }
}
