//! Transience criterion for i.i.d. environments.
//!
//! The walk is transient iff some `s ≠ 0`, `λ > 0` give
//! `Σ_y μ_y^ω λ^{y·s} ≤ 1` for every law `ω` in the support. Writing
//! `t = (ln λ) s` turns this into minimising the convex function
//!
//! ```text
//! Φ(t) = max_ω ln Σ_y μ_y^ω e^{t·y}
//! ```
//!
//! and comparing the minimum with zero. `t = 0` is the `λ = 1` case, where the
//! condition reads `Σ_y μ_y ≤ 1`; since `Φ` is continuous its infimum over
//! `t ≠ 0` equals its minimum over all `t`, so no separate branch is needed
//! beyond keeping the reported minimiser nonzero.

use crate::environment::SiteLaw;
use crate::error::{Error, Result};
use crate::expectation::log_sum_exp;

/// Default half-width of the boundary band for the verdict.
pub const DEFAULT_CRITERION_TOL: f64 = 1e-6;

const SEARCH_RADIUS: f64 = 64.0;
const STEP_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionVerdict {
    Transient,
    Recurrent,
    Boundary,
}

impl CriterionVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionVerdict::Transient => "transient",
            CriterionVerdict::Recurrent => "recurrent",
            CriterionVerdict::Boundary => "boundary",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    /// Minimiser `t* = (ln λ) s`.
    pub t_star: Vec<f64>,
    /// `Φ(t*)`.
    pub log_value: f64,
    /// `exp Φ(t*) = max_ω Σ_y μ_y^ω λ^{y·s}`.
    pub value: f64,
    pub verdict: CriterionVerdict,
    /// Support law attaining the max at `t*`.
    pub witness_law: usize,
    /// Finite-difference gradient norm at `t*`.
    pub gradient_norm: f64,
    /// `t*` hit the search radius (the infimum may lie at infinity).
    pub on_boundary: bool,
}

fn law_value(law: &SiteLaw, t: &[f64]) -> f64 {
    let offsets = law.step_set().offsets();
    let dim = t.len();
    let mut terms = Vec::with_capacity(offsets.len());
    for (y, lm) in offsets.iter().zip(law.log_mean_offspring()) {
        let dot: f64 = y.coords(dim).iter().zip(t).map(|(&c, ti)| c as f64 * ti).sum();
        terms.push(lm + dot);
    }
    log_sum_exp(&terms)
}

fn argmax_value(laws: &[SiteLaw], t: &[f64]) -> (usize, f64) {
    laws.iter()
        .enumerate()
        .map(|(i, l)| (i, law_value(l, t)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// `Φ(t) = max_ω ln Σ_y μ_y^ω e^{t·y}`.
pub fn criterion_value_at(laws: &[SiteLaw], t: &[f64]) -> f64 {
    argmax_value(laws, t).1
}

fn unit_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..72)
            .map(|k| {
                let th = k as f64 * std::f64::consts::TAU / 72.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci sphere.
            let n = 256;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-11 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, t: &[f64]) -> Vec<f64> {
    let h = 1e-7;
    (0..t.len())
        .map(|i| {
            let mut up = t.to_vec();
            let mut dn = t.to_vec();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn clamp_to_ball(t: &mut [f64]) {
    let n = norm(t);
    if n > SEARCH_RADIUS {
        for x in t.iter_mut() {
            *x *= SEARCH_RADIUS / n;
        }
    }
}

/// Descent with finite-difference gradients, falling back to a pattern
/// search when the gradient step fails at a kink of the max.
fn local_descent<F: Fn(&[f64]) -> f64>(f: &F, start: Vec<f64>) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut t = start;
    let mut ft = f(&t);
    let mut step: f64 = 0.05;
    let mut patterns: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            patterns.push(e);
        }
        for j in i + 1..dim {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut e = vec![0.0; dim];
                e[i] = si / 2f64.sqrt();
                e[j] = sj / 2f64.sqrt();
                patterns.push(e);
            }
        }
    }
    let mut iterations = 0;
    while step >= STEP_TOL && iterations < 200_000 {
        iterations += 1;
        let g = fd_gradient(f, &t);
        let gn = norm(&g);
        let mut moved = false;
        if gn > 1e-14 {
            let mut cand: Vec<f64> = t.iter().zip(&g).map(|(x, gi)| x - step * gi / gn).collect();
            clamp_to_ball(&mut cand);
            let fc = f(&cand);
            if fc < ft {
                t = cand;
                ft = fc;
                step *= 1.5;
                moved = true;
            }
        }
        if !moved {
            let best = patterns
                .iter()
                .map(|e| {
                    let mut cand: Vec<f64> = t.iter().zip(e).map(|(x, ei)| x + step * ei).collect();
                    clamp_to_ball(&mut cand);
                    let fc = f(&cand);
                    (cand, fc)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((cand, fc)) if fc < ft => {
                    t = cand;
                    ft = fc;
                }
                _ => step *= 0.5,
            }
        }
    }
    (t, ft)
}

/// Minimises `Φ` and classifies: transient if `min Φ < -tol`, recurrent if
/// `min Φ > tol`, boundary otherwise.
pub fn transience_criterion(laws: &[SiteLaw], tol: f64) -> Result<CriterionResult> {
    let first = laws
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty law support".into()))?;
    for (i, law) in laws.iter().enumerate() {
        if law.mean_total() < 1.0 - 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "law {i} has mean total offspring {} < 1",
                law.mean_total()
            )));
        }
        if law.step_set() != first.step_set() {
            return Err(Error::InvalidArgument("laws use different step sets".into()));
        }
    }
    let dim = first.step_set().dim();
    let phi = |t: &[f64]| criterion_value_at(laws, t);

    let mut best_t = vec![0.0; dim];
    let mut best_f = f64::INFINITY;
    for u in unit_directions(dim) {
        let (r, fr) = golden_section(
            |r| phi(&u.iter().map(|c| c * r).collect::<Vec<_>>()),
            0.0,
            SEARCH_RADIUS,
        );
        if fr < best_f {
            best_f = fr;
            best_t = u.iter().map(|c| c * r).collect();
        }
    }
    let (mut t_star, _) = local_descent(&phi, best_t);
    if norm(&t_star) < 1e-12 {
        t_star[0] = 1e-9;
    }
    let (witness_law, log_value) = argmax_value(laws, &t_star);
    let gradient_norm = norm(&fd_gradient(&phi, &t_star));
    let on_boundary = norm(&t_star) >= SEARCH_RADIUS * (1.0 - 1e-6);
    let verdict = if log_value < -tol {
        CriterionVerdict::Transient
    } else if log_value > tol {
        CriterionVerdict::Recurrent
    } else {
        CriterionVerdict::Boundary
    };
    Ok(CriterionResult {
        t_star,
        log_value,
        value: log_value.exp(),
        verdict,
        witness_law,
        gradient_norm,
        on_boundary,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::environment::{OffspringConfig, SiteLaw};
    use crate::lattice::{Site, StepSet};

    fn nn1_law(mu_plus: f64, mu_minus: f64) -> SiteLaw {
        // Two-stage law with r = mu_plus + mu_minus < 2 and one or two children.
        let s = Arc::new(StepSet::nearest_neighbor(1).unwrap());
        let r = mu_plus + mu_minus;
        let plus = s.index_of(&Site::new(&[1])).unwrap();
        let mut p = vec![0.0; 2];
        p[plus] = mu_plus / r;
        p[1 - plus] = mu_minus / r;
        SiteLaw::multinomial_mixture(s, &[(1, 2.0 - r), (2, r - 1.0)], &p).unwrap()
    }

    #[test]
    fn value_at_zero_is_log_mean_total() {
        let laws = vec![nn1_law(0.84, 0.21), nn1_law(0.6, 0.6)];
        assert!((criterion_value_at(&laws, &[0.0]) - 1.2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_drift_value() {
        let s = Arc::new(StepSet::nearest_neighbor(1).unwrap());
        let law = SiteLaw::point_mass(
            s.clone(),
            OffspringConfig::from_pairs(&s, &[(Site::new(&[1]), 1)]).unwrap(),
        )
        .unwrap();
        assert!((criterion_value_at(&[law], &[1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recurrent_law_dominates_support() {
        let transient = nn1_law(0.84, 0.21);
        let recurrent = nn1_law(0.6, 0.6);
        let r = transience_criterion(&[transient.clone(), recurrent], DEFAULT_CRITERION_TOL).unwrap();
        assert_eq!(r.verdict, CriterionVerdict::Recurrent);
        let r = transience_criterion(&[transient], DEFAULT_CRITERION_TOL).unwrap();
        assert_eq!(r.verdict, CriterionVerdict::Transient);
    }

    #[test]
    fn empty_support_is_an_error() {
        assert!(transience_criterion(&[], 1e-6).is_err());
    }

    #[test]
    fn pure_drift_runs_to_the_search_boundary() {
        let s = Arc::new(StepSet::nearest_neighbor(1).unwrap());
        let law = SiteLaw::point_mass(
            s.clone(),
            OffspringConfig::from_pairs(&s, &[(Site::new(&[1]), 1)]).unwrap(),
        )
        .unwrap();
        let r = transience_criterion(&[law], 1e-6).unwrap();
        assert!(r.on_boundary);
        assert_eq!(r.verdict, CriterionVerdict::Transient);
    }
}
