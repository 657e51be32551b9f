//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails or exceeds its time budget.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use brwre_core::classify::{transience_criterion, CriterionVerdict, DEFAULT_CRITERION_TOL};
use brwre_core::environment::{Dependence, EnvironmentField, EnvironmentSpec, SiteLaw};
use brwre_core::expectation::{check_anderson_equation, solve, solve_adjoint, FactorizedEnv, LogMassField};
use brwre_core::geometry::{polytope_hausdorff_l1, unit_l1_ball};
use brwre_core::growth::{
    beta_estimate, beta_profile, classify_by_beta, total_growth, Recurrence, DEFAULT_BETA_TOL,
};
use brwre_core::montecarlo::induced::{InducedWalk, InducedWalkState};
use brwre_core::montecarlo::{ln_biguint, step_population, PopulationState, SamplerStats, SimulationConfig};
use brwre_core::rational::{Rational, RationalPoint};
use brwre_core::rng::{StreamFactory, StreamPurpose};
use brwre_core::shape::{passage_times, passage_times_from, shape_polytope, PassageTimeMap};
use brwre_core::Site;
use common::*;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn symmetric_doubling() -> EnvironmentField {
    let s = nn(1);
    homogeneous(point_mass(&s, &[(&[1], 1), (&[-1], 1)]))
}

fn rate_function_by_legendre(a: f64) -> f64 {
    // I(a) = sup_t [t a - ln cosh t], by golden-section on a wide bracket.
    let g = |t: f64| t * a - t.cosh().ln();
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-13 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    g(0.5 * (lo + hi))
}

fn tenths(k: i64) -> RationalPoint {
    RationalPoint::new(vec![Rational::new(k, 10)]).unwrap()
}

fn criterion_1() -> Outcome {
    const TOL: f64 = 0.01;
    let env = symmetric_doubling();
    let est = beta_estimate(&env, &RationalPoint::zero(1), 1000).map_err(|e| e.to_string())?;
    let err = (est.value - std::f64::consts::LN_2).abs();
    check(
        err <= TOL,
        format!("beta(0) = {:.6}, |error| = {err:.2e} <= {TOL}", est.value),
    )
}

fn profile_2() -> Result<brwre_core::growth::BetaProfile, String> {
    let env = symmetric_doubling();
    let dirs: Vec<RationalPoint> = (-8..=8).map(tenths).collect();
    beta_profile(&env, &dirs, 1000).map_err(|e| e.to_string())
}

fn criterion_2() -> Outcome {
    const TOL: f64 = 0.03;
    let profile = profile_2()?;
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let a = k as f64 / 10.0;
        let oracle = std::f64::consts::LN_2 - rate_function_by_legendre(a);
        let est = profile.find(&tenths(k)).ok_or("direction missing")?;
        worst = worst.max((est.value - oracle).abs());
    }
    check(worst <= TOL, format!("max |beta(a) - oracle| = {worst:.2e} <= {TOL}"))
}

fn criterion_3() -> Outcome {
    const TOL: f64 = 1e-6;
    let transient = transience_criterion(&[drift_law_1d(0.84, 0.21)], DEFAULT_CRITERION_TOL)
        .map_err(|e| e.to_string())?;
    let recurrent = transience_criterion(&[drift_law_1d(0.6, 0.6)], DEFAULT_CRITERION_TOL)
        .map_err(|e| e.to_string())?;
    // AM-GM: min over lambda of mu+ lambda + mu- / lambda is 2 sqrt(mu+ mu-).
    let oracle_t = 2.0 * (0.84f64 * 0.21).sqrt();
    let oracle_r = 2.0 * (0.6f64 * 0.6).sqrt();
    let ok = (transient.value - oracle_t).abs() <= TOL
        && transient.verdict == CriterionVerdict::Transient
        && (recurrent.value - oracle_r).abs() <= TOL
        && recurrent.verdict == CriterionVerdict::Recurrent;
    check(
        ok,
        format!(
            "values {:.9} ({}), {:.9} ({})",
            transient.value,
            transient.verdict.as_str(),
            recurrent.value,
            recurrent.verdict.as_str()
        ),
    )
}

/// Twenty i.i.d. d = 1 environments, ten per criterion verdict, each with
/// criterion value at least 0.05 from 1.
fn classifier_battery() -> Vec<(EnvironmentField, f64, CriterionVerdict)> {
    const MARGIN: f64 = 0.05;
    const PER_CLASS: usize = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA77E);
    let s = nn(1);
    let plus = s.index_of(&Site::new(&[1])).unwrap();
    let mut out = Vec::new();
    let (mut transient, mut recurrent) = (0, 0);
    while transient + recurrent < 2 * PER_CLASS {
        let k = rng.random_range(2..=3);
        let laws: Vec<SiteLaw> = (0..k)
            .map(|_| {
                let r = rng.random_range(1.0..1.5);
                let p_plus = rng.random_range(0.05..0.95);
                let mut p = vec![1.0 - p_plus; 2];
                p[plus] = p_plus;
                two_stage(&s, r, &p)
            })
            .collect();
        let crit = transience_criterion(&laws, DEFAULT_CRITERION_TOL).unwrap();
        if (crit.value - 1.0).abs() < MARGIN {
            continue;
        }
        let slot = match crit.verdict {
            CriterionVerdict::Transient => &mut transient,
            _ => &mut recurrent,
        };
        if *slot == PER_CLASS {
            continue;
        }
        *slot += 1;
        let weights = vec![1.0 / k as f64; k];
        let spec = EnvironmentSpec::new(s.clone(), laws, weights, Dependence::Iid, rng.random()).unwrap();
        out.push((EnvironmentField::new(spec).unwrap(), crit.value, crit.verdict));
    }
    out
}

fn criterion_4() -> Outcome {
    let battery = classifier_battery();
    let results: Vec<(f64, Recurrence, CriterionVerdict, f64)> = battery
        .par_iter()
        .map(|(env, value, verdict)| {
            let profile = beta_profile(env, &[RationalPoint::zero(1)], 1200).unwrap();
            let by_beta = classify_by_beta(&profile, DEFAULT_BETA_TOL).unwrap();
            (profile.grid[0].value, by_beta, *verdict, *value)
        })
        .collect();
    let mut disagreements = Vec::new();
    let mut recurrent = 0;
    for (i, (beta0, by_beta, verdict, value)) in results.iter().enumerate() {
        let agree = matches!(
            (by_beta, verdict),
            (Recurrence::Recurrent, CriterionVerdict::Recurrent)
                | (Recurrence::Transient, CriterionVerdict::Transient)
        );
        if *verdict == CriterionVerdict::Recurrent {
            recurrent += 1;
        }
        if !agree {
            disagreements.push(format!(
                "#{i}: beta(0) = {beta0:.4} ({}), criterion {value:.4} ({})",
                by_beta.as_str(),
                verdict.as_str()
            ));
        }
    }
    check(
        disagreements.is_empty(),
        format!(
            "{} instances ({recurrent} recurrent), disagreements: [{}]",
            results.len(),
            disagreements.join("; ")
        ),
    )
}

fn criterion_5() -> Outcome {
    const N: usize = 10;
    const REPLICAS: u64 = 100_000;
    const MASS_FLOOR: f64 = 1e-3;
    const SE_MULT: f64 = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let env = random_env(&mut rng, 1, 3, 1.1);
    let dp = solve(&env, Site::ORIGIN, N).map_err(|e| e.to_string())?;
    let layer = dp.last().unwrap();
    let streams = StreamFactory::new(55);
    let cfg = SimulationConfig::default();
    let sums = (0..REPLICAS)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.stream(r, StreamPurpose::Branching);
            let mut stats = SamplerStats::default();
            let mut state = PopulationState::initial(Site::ORIGIN);
            for _ in 0..N {
                state = step_population(&env, &state, &mut rng, &cfg, &mut stats).unwrap();
            }
            let mut m: BTreeMap<Site, (f64, f64)> = BTreeMap::new();
            for (x, c) in &state.counts {
                let v = c.to_f64().unwrap();
                m.insert(*x, (v, v * v));
            }
            m
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (x, (s, q)) in b {
                let e = a.entry(x).or_insert((0.0, 0.0));
                e.0 += s;
                e.1 += q;
            }
            a
        });
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (x, log_mass) in layer.iter() {
        let mass = log_mass.exp();
        if mass < MASS_FLOOR {
            continue;
        }
        checked += 1;
        let (s, q) = sums.get(&x).copied().unwrap_or((0.0, 0.0));
        let mean = s / REPLICAS as f64;
        let var = (q / REPLICAS as f64 - mean * mean).max(0.0) * REPLICAS as f64 / (REPLICAS - 1) as f64;
        let se = (var / REPLICAS as f64).sqrt();
        let z = if se > 0.0 { (mean - mass).abs() / se } else if (mean - mass).abs() < 1e-9 { 0.0 } else { f64::INFINITY };
        worst = worst.max(z);
        if z > SE_MULT {
            failures.push(format!("{x}: mc {mean:.5} dp {mass:.5} z {z:.2}"));
        }
    }
    check(
        failures.is_empty() && checked > 0,
        format!("{checked} sites, max |z| = {worst:.2} <= {SE_MULT} [{}]", failures.join("; ")),
    )
}

fn criterion_6() -> Outcome {
    const SLACK: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut triples = 0;
    for e in 0..10 {
        let dim = 1 + e % 2;
        let env = random_env(&mut rng, dim, 3, 1.8);
        let mut cache: BTreeMap<Site, Vec<LogMassField>> = BTreeMap::new();
        let mut layers = |x: Site| -> Vec<LogMassField> {
            cache
                .entry(x)
                .or_insert_with(|| solve(&env, x, 16).unwrap())
                .clone()
        };
        for _ in 0..50 {
            let x = random_site(&mut rng, dim, 3);
            let n1 = rng.random_range(0..=8usize);
            let n2 = rng.random_range(0..=8usize);
            let z = x + random_site(&mut rng, dim, n1.min(3) as i64);
            let y = z + random_site(&mut rng, dim, n2.min(3) as i64);
            let from_x = layers(x);
            let from_z = layers(z);
            let lhs = from_x[n1 + n2].get(y);
            let rhs = from_x[n1].get(z) + from_z[n2].get(y);
            triples += 1;
            if rhs > f64::NEG_INFINITY {
                worst = worst.max(rhs - lhs);
                if lhs < rhs - SLACK {
                    violations += 1;
                }
            }
        }
    }
    check(
        violations == 0,
        format!("{triples} triples, {violations} violations, max excess {worst:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut sub_violations = 0;
    let mut bound_violations = 0;
    let mut mono_violations = 0;
    let mut triples = 0;
    const RADIUS: i64 = 60;
    for e in 0..10 {
        let dim = 1 + e % 2;
        let env = random_env(&mut rng, dim, 3, 1.8);
        let eps0: f64 = env
            .laws()
            .iter()
            .flat_map(|l| env.step_set().unit_indices().iter().map(move |&u| l.send_probability()[u]))
            .fold(f64::INFINITY, f64::min);
        let delta = 0.5 * eps0;
        let mut cache: BTreeMap<Site, PassageTimeMap> = BTreeMap::new();
        let mut map = |x: Site| -> PassageTimeMap {
            cache
                .entry(x)
                .or_insert_with(|| passage_times_from(&env, x, delta, RADIUS).unwrap())
                .clone()
        };
        for _ in 0..50 {
            let x = random_site(&mut rng, dim, 5);
            let z = random_site(&mut rng, dim, 5);
            let y = random_site(&mut rng, dim, 5);
            let (mx, mz) = (map(x), map(z));
            triples += 1;
            let (txz, tzy, txy) = (mx.get(z), mz.get(y), mx.get(y));
            match (txz, tzy, txy) {
                (Some(a), Some(b), Some(c)) if c > a + b => sub_violations += 1,
                (Some(_), Some(_), None) => sub_violations += 1,
                _ => {}
            }
            let dist = (y - x).l1();
            let l0 = env.step_set().l0_max();
            match txy {
                Some(t) => {
                    if (t as i64) * l0 < dist || t as i64 > dist {
                        bound_violations += 1;
                    }
                }
                None => bound_violations += 1,
            }
        }
        // δ-monotonicity from the origin on a 5-point grid.
        let mut grid = [0.0, 0.5 * eps0, 0.9 * eps0, 0.3, 0.6];
        grid.sort_by(f64::total_cmp);
        let maps: Vec<PassageTimeMap> = grid.iter().map(|&d| passage_times(&env, d, 20).unwrap()).collect();
        for w in maps.windows(2) {
            for (x, t_lo) in w[0].reached() {
                if let Some(t_hi) = w[1].get(x) {
                    if t_hi < t_lo {
                        mono_violations += 1;
                    }
                }
            }
            for (x, _) in w[1].reached() {
                if w[0].get(x).is_none() {
                    mono_violations += 1;
                }
            }
        }
    }
    check(
        sub_violations == 0 && bound_violations == 0 && mono_violations == 0,
        format!(
            "{triples} triples: subadditivity {sub_violations}, bounds {bound_violations}, delta-monotonicity {mono_violations} violations"
        ),
    )
}

fn criterion_8() -> Outcome {
    const N: usize = 100;
    let tol = 2.0 / N as f64;
    let s = nn(2);
    let env = homogeneous(point_mass(&s, &[(&[1, 0], 1), (&[-1, 0], 1), (&[0, 1], 1), (&[0, -1], 1)]));
    let ptm = passage_times(&env, 0.5, N as i64).map_err(|e| e.to_string())?;
    let shape = shape_polytope(&ptm, N).map_err(|e| e.to_string())?;
    let hull = shape.hull.ok_or("no hull in d = 2")?;
    let d = polytope_hausdorff_l1(&hull, &unit_l1_ball(2)).map_err(|e| e.to_string())?;
    check(d <= tol, format!("Hausdorff distance {d:.2e} <= {tol}"))
}

fn criterion_9() -> Outcome {
    const TOL: f64 = 1e-10;
    const N: usize = 20;
    let mut worst: f64 = 0.0;
    // homogeneous d = 2
    let s = nn(2);
    let hom = homogeneous(two_stage(&s, 1.7, &[0.1, 0.2, 0.3, 0.4]));
    let fenv = FactorizedEnv::from_environment(hom);
    let layers = solve_adjoint(fenv.env(), Site::ORIGIN, N).map_err(|e| e.to_string())?;
    worst = worst.max(check_anderson_equation(&fenv, &layers).map_err(|e| e.to_string())?);
    // random factorized environments, d = 1 and 2
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for dim in [1, 2, 1, 2] {
        let s = nn(dim);
        let mut laws = Vec::new();
        let mut factors = Vec::new();
        for _ in 0..3 {
            let r = rng.random_range(1.0..2.0);
            let p = random_jumps(&mut rng, s.len(), 0.02);
            laws.push(two_stage(&s, r, &p));
            factors.push((r, p));
        }
        let spec = EnvironmentSpec::new(s, laws, vec![0.3, 0.3, 0.4], Dependence::Iid, rng.random())
            .map_err(|e| e.to_string())?;
        let env = EnvironmentField::new(spec).map_err(|e| e.to_string())?;
        let fenv = FactorizedEnv::new(env, factors).map_err(|e| e.to_string())?;
        let target = random_site(&mut rng, dim, 4);
        let layers = solve_adjoint(fenv.env(), target, N).map_err(|e| e.to_string())?;
        worst = worst.max(check_anderson_equation(&fenv, &layers).map_err(|e| e.to_string())?);
    }
    check(worst <= TOL, format!("max relative residual {worst:.2e} <= {TOL}"))
}

fn criterion_10() -> Outcome {
    const EXACT_TOL: f64 = 1e-9;
    const MC_TOL: f64 = 0.05;
    const N: usize = 200;
    const REPLICAS: u64 = 200;
    const FRACTION: f64 = 0.95;
    // one child or three, each with probability 1/2: mean total 2
    let s = nn(1);
    let law = SiteLaw::multinomial_mixture(s, &[(1, 0.5), (3, 0.5)], &[0.5, 0.5]).unwrap();
    let env = homogeneous(law);
    let growth = total_growth(&env, N, None).map_err(|e| e.to_string())?;
    let exact_err = (growth.log_expected - std::f64::consts::LN_2).abs();
    let streams = StreamFactory::new(10);
    let cfg = SimulationConfig::default();
    let rates: Vec<f64> = (0..REPLICAS)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.stream(r, StreamPurpose::Branching);
            let mut stats = SamplerStats::default();
            let mut state = PopulationState::initial(Site::ORIGIN);
            for _ in 0..N {
                state = step_population(&env, &state, &mut rng, &cfg, &mut stats).unwrap();
            }
            ln_biguint(&state.total) / N as f64
        })
        .collect();
    let within = rates
        .iter()
        .filter(|r| (*r - std::f64::consts::LN_2).abs() <= MC_TOL)
        .count();
    let frac = within as f64 / REPLICAS as f64;
    check(
        exact_err <= EXACT_TOL && frac >= FRACTION,
        format!(
            "|ln E Z_n / n - ln 2| = {exact_err:.2e} <= {EXACT_TOL}; {within}/{REPLICAS} runs within {MC_TOL}"
        ),
    )
}

fn criterion_11() -> Outcome {
    const TOL: f64 = 0.03;
    let profile = profile_2()?;
    let defect = profile.midpoint_concavity_defect();
    check(defect <= TOL, format!("max midpoint concavity defect {defect:.2e} <= {TOL}"))
}

fn criterion_12() -> Outcome {
    const STEPS: u64 = 1_000_000;
    const P_MIN: f64 = 0.001;
    // d = 2 with a richer step set, so the residual kernel has non-unit mass.
    let offsets: Vec<Site> = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-2, 0]]
        .iter()
        .map(|c| Site::new(c))
        .collect();
    let s = std::sync::Arc::new(brwre_core::StepSet::new(2, offsets).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let laws: Vec<SiteLaw> = (0..3).map(|_| random_law(&mut rng, &s, 1.9)).collect();
    let spec = EnvironmentSpec::new(s.clone(), laws, vec![0.4, 0.3, 0.3], Dependence::Iid, 12).unwrap();
    let env = EnvironmentField::new(spec).unwrap();
    let walk = InducedWalk::new(&env);
    let site = Site::new(&[3, -2]);
    let streams = StreamFactory::new(12);
    let mut direct_rng = streams.stream(0, StreamPurpose::InducedWalk);
    let mut forced_rng = streams.stream(0, StreamPurpose::ForcingVariables);
    let mut direct = vec![0u64; s.len()];
    let mut decomposed = vec![0u64; s.len()];
    for _ in 0..STEPS {
        let mut a = InducedWalkState::new(site);
        walk.step_direct(&mut a, &mut direct_rng);
        direct[s.index_of(&(a.position - site)).unwrap()] += 1;
        let mut b = InducedWalkState::new(site);
        walk.step(&mut b, &mut forced_rng).map_err(|e| e.to_string())?;
        decomposed[s.index_of(&(b.position - site)).unwrap()] += 1;
    }
    let (stat, df) = two_sample_chi_square(&direct, &decomposed);
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    check(
        p > P_MIN,
        format!("chi-square {stat:.2} on {df} df, p = {p:.4} > {P_MIN} (forced fraction {:.4})", walk.forced_probability()),
    )
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "beta(0) oracle", budget: Duration::from_secs(5), run: criterion_1 },
        Criterion { id: 2, name: "beta(a) profile oracle", budget: Duration::from_secs(30), run: criterion_2 },
        Criterion { id: 3, name: "criterion closed form", budget: Duration::from_secs(1), run: criterion_3 },
        Criterion { id: 4, name: "classifier cross-agreement", budget: Duration::from_secs(300), run: criterion_4 },
        Criterion { id: 5, name: "MC/DP agreement", budget: Duration::from_secs(120), run: criterion_5 },
        Criterion { id: 6, name: "supermultiplicativity", budget: Duration::from_secs(120), run: criterion_6 },
        Criterion { id: 7, name: "passage-time suite", budget: Duration::from_secs(60), run: criterion_7 },
        Criterion { id: 8, name: "shape oracle", budget: Duration::from_secs(30), run: criterion_8 },
        Criterion { id: 9, name: "Anderson-equation residual", budget: Duration::from_secs(10), run: criterion_9 },
        Criterion { id: 10, name: "total growth", budget: Duration::from_secs(180), run: criterion_10 },
        Criterion { id: 11, name: "concavity of beta", budget: Duration::from_secs(30), run: criterion_11 },
        Criterion { id: 12, name: "induced-walk decomposition", budget: Duration::from_secs(60), run: criterion_12 },
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for c in &criteria {
        let label = format!("criterion {:>2} {}", c.id, c.name);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (status, detail) = match (&outcome, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over time budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} {label}: {detail} [{:.2}s / {}s]",
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
