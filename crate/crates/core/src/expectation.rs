//! Quenched expected particle counts.
//!
//! With `m_n(z) = E_ω η_n^x(z)` the forward recursion is
//!
//! ```text
//! m_{n+1}(z) = Σ_{y ∈ 𝔄} μ_y^{ω_{z-y}} m_n(z - y),      m_0 = 1{x}
//! ```
//!
//! and the adjoint object `u_n(x) = E_ω η_n^x(z)` (fixed target, varying
//! start) obeys `u_{n+1}(x) = Σ_y μ_y^{ω_x} u_n(x + y)`. When the mean
//! offspring factorizes as `μ_y = r(x) p(x,y)` the adjoint recursion is the
//! discrete Anderson equation
//!
//! ```text
//! u_{n+1} - u_n = r Δ^ω u_n + (r - 1) u_n,   (Δ^ω f)(x) = Σ_y p(x,y) [f(x+y) - f(x)].
//! ```
//!
//! Both recursions are evaluated in log space on dense boxes that grow by the
//! per-axis reach of the step set each layer. Each destination site gathers
//! its incoming terms in the sorted offset order, so results do not depend on
//! the number of worker threads.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::environment::EnvironmentField;
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Site};

const DEFAULT_MAX_RADIUS: i64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Fixed start, varying position: `E_ω η_n^{anchor}(·)`.
    Forward,
    /// Fixed target, varying start: `E_ω η_n^{·}(anchor)`.
    Adjoint,
}

/// One time layer of log expected counts; `-∞` encodes zero mass.
#[derive(Clone, Debug, PartialEq)]
pub struct LogMassField {
    time: usize,
    anchor: Site,
    orientation: Orientation,
    region: BoxRegion,
    values: Vec<f64>,
}

impl LogMassField {
    /// The time-0 layer: mass one at `anchor`.
    pub fn delta(dim: usize, anchor: Site, orientation: Orientation) -> LogMassField {
        LogMassField {
            time: 0,
            anchor,
            orientation,
            region: BoxRegion::cube(dim, anchor, 0),
            values: vec![0.0],
        }
    }

    pub fn from_parts(
        time: usize,
        anchor: Site,
        orientation: Orientation,
        region: BoxRegion,
        values: Vec<f64>,
    ) -> Result<LogMassField> {
        if values.len() != region.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a box of {} sites",
                values.len(),
                region.len()
            )));
        }
        Ok(LogMassField {
            time,
            anchor,
            orientation,
            region,
            values,
        })
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn anchor(&self) -> Site {
        self.anchor
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Log-mass at `x`, `-∞` outside the stored box.
    pub fn get(&self, x: Site) -> f64 {
        self.region
            .index(&x)
            .map_or(f64::NEG_INFINITY, |i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.region.site_at(i), v))
    }

    /// Sites carrying positive mass.
    pub fn support(&self) -> impl Iterator<Item = Site> + '_ {
        self.iter().filter(|(_, v)| *v > f64::NEG_INFINITY).map(|(s, _)| s)
    }
}

/// `ln Σ exp(t)` over the terms in the given order.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + s.ln()
}

/// Layer-by-layer solver bound to one environment.
pub struct Solver<'a> {
    env: &'a EnvironmentField,
    max_radius: i64,
    pool: Option<ThreadPool>,
}

impl<'a> Solver<'a> {
    pub fn new(env: &'a EnvironmentField) -> Solver<'a> {
        Solver {
            env,
            max_radius: DEFAULT_MAX_RADIUS,
            pool: None,
        }
    }

    /// Runs layer computations on a dedicated pool of `workers` threads.
    pub fn with_workers(mut self, workers: usize) -> Result<Solver<'a>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        self.pool = Some(pool);
        Ok(self)
    }

    pub fn with_max_radius(mut self, radius: i64) -> Solver<'a> {
        self.max_radius = radius;
        self
    }

    fn next_region(&self, field: &LogMassField) -> Result<BoxRegion> {
        let d = field.dim();
        let reach = self.env.step_set().axis_reach();
        let t = field.time as i64 + 1;
        let mut grown = [0; 3];
        for i in 0..d {
            grown[i] = reach[i] * t;
        }
        let needed = grown.iter().copied().max().unwrap_or(0);
        if needed > self.max_radius {
            return Err(Error::BoxOverflow {
                needed,
                max: self.max_radius,
            });
        }
        Ok(BoxRegion::with_reach(d, field.anchor, grown))
    }

    fn run_parallel<F: FnOnce() + Send>(&self, f: F) {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    fn law_indices(&self, region: &BoxRegion) -> Vec<usize> {
        let mut out = vec![0usize; region.len()];
        let env = self.env;
        self.run_parallel(|| {
            out.par_iter_mut()
                .with_min_len(512)
                .enumerate()
                .for_each(|(i, slot)| *slot = env.law_index(region.site_at(i)));
        });
        out
    }

    /// One step of the recursion matching the field's orientation.
    pub fn step(&self, field: &LogMassField) -> Result<LogMassField> {
        if field.dim() != self.env.dim() {
            return Err(Error::InvalidArgument("field and environment dimensions differ".into()));
        }
        let region = self.next_region(field)?;
        let offsets = self.env.step_set().offsets();
        let laws = self.env.laws();
        let mut values = vec![f64::NEG_INFINITY; region.len()];
        match field.orientation {
            Orientation::Forward => {
                let src_laws = self.law_indices(&field.region);
                self.run_parallel(|| {
                    values
                        .par_iter_mut()
                        .with_min_len(256)
                        .enumerate()
                        .for_each(|(i, slot)| {
                            let z = region.site_at(i);
                            let mut terms = [f64::NEG_INFINITY; 32];
                            let mut used = 0;
                            for (k, y) in offsets.iter().enumerate() {
                                if let Some(j) = field.region.index(&(z - *y)) {
                                    terms[used] =
                                        laws[src_laws[j]].log_mean_offspring()[k] + field.values[j];
                                    used += 1;
                                }
                            }
                            *slot = log_sum_exp(&terms[..used]);
                        });
                });
            }
            Orientation::Adjoint => {
                let dst_laws = self.law_indices(&region);
                self.run_parallel(|| {
                    values
                        .par_iter_mut()
                        .with_min_len(256)
                        .enumerate()
                        .for_each(|(i, slot)| {
                            let x = region.site_at(i);
                            let log_mu = laws[dst_laws[i]].log_mean_offspring();
                            let mut terms = [f64::NEG_INFINITY; 32];
                            let mut used = 0;
                            for (k, y) in offsets.iter().enumerate() {
                                if let Some(j) = field.region.index(&(x + *y)) {
                                    terms[used] = log_mu[k] + field.values[j];
                                    used += 1;
                                }
                            }
                            *slot = log_sum_exp(&terms[..used]);
                        });
                });
            }
        }
        Ok(LogMassField {
            time: field.time + 1,
            anchor: field.anchor,
            orientation: field.orientation,
            region,
            values,
        })
    }

    /// Calls `visit` on layers `0..=n` without retaining them; returns the last.
    pub fn solve_with<F>(
        &self,
        anchor: Site,
        n: usize,
        orientation: Orientation,
        mut visit: F,
    ) -> Result<LogMassField>
    where
        F: FnMut(&LogMassField) -> Result<()>,
    {
        if self.env.step_set().offsets().len() > 32 {
            return Err(Error::InvalidArgument("step sets larger than 32 offsets".into()));
        }
        let mut layer = LogMassField::delta(self.env.dim(), anchor, orientation);
        visit(&layer)?;
        for _ in 0..n {
            layer = self.step(&layer)?;
            visit(&layer)?;
        }
        Ok(layer)
    }

    /// Layers `0..=n` of `E_ω η_k^{start}(·)`.
    pub fn solve(&self, start: Site, n: usize) -> Result<Vec<LogMassField>> {
        let mut out = Vec::with_capacity(n + 1);
        self.solve_with(start, n, Orientation::Forward, |l| {
            out.push(l.clone());
            Ok(())
        })?;
        Ok(out)
    }

    /// Layers `0..=n` of `E_ω η_k^{·}(target)`.
    pub fn solve_adjoint(&self, target: Site, n: usize) -> Result<Vec<LogMassField>> {
        let mut out = Vec::with_capacity(n + 1);
        self.solve_with(target, n, Orientation::Adjoint, |l| {
            out.push(l.clone());
            Ok(())
        })?;
        Ok(out)
    }
}

pub fn forward_layer(env: &EnvironmentField, field: &LogMassField) -> Result<LogMassField> {
    if field.orientation != Orientation::Forward {
        return Err(Error::WrongOrientation("forward_layer needs a forward field".into()));
    }
    Solver::new(env).step(field)
}

pub fn solve(env: &EnvironmentField, start: Site, n: usize) -> Result<Vec<LogMassField>> {
    Solver::new(env).solve(start, n)
}

pub fn solve_adjoint(env: &EnvironmentField, target: Site, n: usize) -> Result<Vec<LogMassField>> {
    Solver::new(env).solve_adjoint(target, n)
}

/// `ln Σ_x m(x)`: the log expected population size.
pub fn expected_total(field: &LogMassField) -> f64 {
    log_sum_exp(&field.values)
}

/// Mean offspring written as `μ_y = r(x) p(x, y)`, indexed by law.
#[derive(Clone, Debug)]
pub struct FactorizedEnv {
    env: EnvironmentField,
    r: Vec<f64>,
    p: Vec<Vec<f64>>,
}

impl FactorizedEnv {
    /// Checks that every law in the support satisfies `μ_y = r p_y` to 1e-10.
    pub fn new(env: EnvironmentField, factors: Vec<(f64, Vec<f64>)>) -> Result<FactorizedEnv> {
        if factors.len() != env.laws().len() {
            return Err(Error::InvalidArgument(format!(
                "{} factors for {} laws",
                factors.len(),
                env.laws().len()
            )));
        }
        let k = env.step_set().len();
        let mut r = Vec::with_capacity(factors.len());
        let mut p = Vec::with_capacity(factors.len());
        for (law_idx, (ri, pi)) in factors.into_iter().enumerate() {
            if pi.len() != k {
                return Err(Error::InvalidArgument("p row does not match the step set".into()));
            }
            let sum: f64 = pi.iter().sum();
            if (sum - 1.0).abs() > 1e-12 || pi.iter().any(|&q| q < 0.0) {
                return Err(Error::InvalidArgument(format!("p row sums to {sum}")));
            }
            if ri < 1.0 - 1e-12 {
                return Err(Error::InvalidArgument(format!("mean offspring r = {ri} < 1")));
            }
            let mu = env.laws()[law_idx].mean_offspring();
            let deviation = mu
                .iter()
                .zip(&pi)
                .map(|(m, q)| (m - ri * q).abs())
                .fold(0.0, f64::max);
            if deviation > 1e-10 {
                return Err(Error::NonFactorized {
                    law: law_idx,
                    deviation,
                });
            }
            r.push(ri);
            p.push(pi);
        }
        Ok(FactorizedEnv { env, r, p })
    }

    /// `r = Σ_y μ_y`, `p = μ / r`; every law admits this factorization.
    pub fn from_environment(env: EnvironmentField) -> FactorizedEnv {
        let (r, p) = env
            .laws()
            .iter()
            .map(|l| {
                let r = l.mean_total();
                (r, l.mean_offspring().iter().map(|m| m / r).collect())
            })
            .unzip();
        FactorizedEnv { env, r, p }
    }

    pub fn env(&self) -> &EnvironmentField {
        &self.env
    }

    pub fn r(&self, x: Site) -> f64 {
        self.r[self.env.law_index(x)]
    }

    pub fn p(&self, x: Site) -> &[f64] {
        &self.p[self.env.law_index(x)]
    }
}

/// Largest relative residual of the discrete Anderson equation over
/// consecutive adjoint layers.
pub fn check_anderson_equation(fenv: &FactorizedEnv, layers: &[LogMassField]) -> Result<f64> {
    if let Some(bad) = layers.iter().find(|l| l.orientation != Orientation::Adjoint) {
        return Err(Error::WrongOrientation(format!(
            "layer at time {} is forward; the Anderson equation holds for the adjoint recursion",
            bad.time
        )));
    }
    let offsets = fenv.env.step_set().offsets();
    let mut worst: f64 = 0.0;
    for pair in layers.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.time != prev.time + 1 || next.anchor != prev.anchor {
            return Err(Error::InvalidArgument("layers are not consecutive".into()));
        }
        for (x, log_next) in next.iter() {
            let u_next = log_next.exp();
            let u = prev.get(x).exp();
            let r = fenv.r(x);
            let laplacian: f64 = fenv
                .p(x)
                .iter()
                .zip(offsets)
                .map(|(q, y)| q * (prev.get(x + *y).exp() - u))
                .sum();
            let residual = (u_next - u - r * laplacian - (r - 1.0) * u).abs() / u_next.max(1.0);
            worst = worst.max(residual);
        }
    }
    Ok(worst)
}
