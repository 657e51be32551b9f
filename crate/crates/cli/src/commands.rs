//! One function per subcommand. Each writes its artifacts through a
//! [`Recorder`] and returns the JSON it prints on stdout.

use std::fmt::Write as _;

use brwre_core::classify::{transience_criterion, CriterionVerdict};
use brwre_core::environment::{check_conditions, Dependence, EnvironmentField, EnvironmentSpec, SiteLaw};
use brwre_core::expectation::{expected_total, Orientation, Solver};
use brwre_core::geometry::{polytope_hausdorff_l1, unit_l1_ball};
use brwre_core::growth::{beta_profile_with, classify_by_beta, Recurrence};
use brwre_core::layer_io;
use brwre_core::montecarlo::{ln_biguint, run, SamplerStats, SimulationConfig};
use brwre_core::rational::RationalPoint;
use brwre_core::rng::{StreamFactory, StreamPurpose};
use brwre_core::shape::{passage_times, shape_polytope};
use brwre_core::Site;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifacts::*;
use crate::config::{
    parse_site, BetaParams, ClassifyParams, LayerFormat, OrientationDoc, ShapeParams, SimulateParams,
    SolveParams,
};
use crate::error::CliResult;
use crate::manifest::Recorder;

/// Replicas simulated per parallel batch; bounds memory for large runs.
const SIM_BATCH: u64 = 4096;

/// What a command hands back to the driver.
pub struct Outcome {
    pub stdout: Value,
    /// Classification was inconclusive or on the boundary.
    pub inconclusive: bool,
}

impl Outcome {
    fn done(stdout: Value) -> Outcome {
        Outcome {
            stdout,
            inconclusive: false,
        }
    }
}

fn coords(s: Site, dim: usize) -> Vec<i64> {
    s.coords(dim).to_vec()
}

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

pub fn check(spec: &EnvironmentSpec, rec: &mut Recorder) -> CliResult<Outcome> {
    rec.stage("conditions");
    let r = check_conditions(spec);
    let dim = spec.dim();
    let doc = ConditionsArtifact {
        holds_b: r.holds_b,
        holds_ue: r.holds_ue,
        epsilon0: finite(r.epsilon0),
        holds_d: r.holds_d,
        d0: finite(r.d0),
        holds_a: r.holds_a,
        aperiodic_witness: r.aperiodic_witness.as_ref().map(|w| WitnessDoc {
            offset: coords(w.offset, dim),
            counts: w.config.counts().to_vec(),
            law: w.law,
        }),
        rho: r.rho,
        all_hold: r.holds_b && r.holds_ue && r.holds_d && r.holds_a,
    };
    for (ok, name) in [
        (r.holds_b, "branching"),
        (r.holds_ue, "uniform ellipticity"),
        (r.holds_d, "bounded mean"),
        (r.holds_a, "aperiodicity"),
    ] {
        if !ok {
            rec.warn(format!("condition fails: {name}"));
        }
    }
    rec.write_json(CONDITIONS_JSON, &doc)?;
    Ok(Outcome::done(serde_json::to_value(&doc)?))
}

pub fn solve(env: &EnvironmentField, p: &SolveParams, rec: &mut Recorder) -> CliResult<Outcome> {
    let dim = env.dim();
    let anchor = parse_site(&p.start, dim)?;
    let orientation = match p.orientation {
        OrientationDoc::Forward => Orientation::Forward,
        OrientationDoc::Adjoint => Orientation::Adjoint,
    };
    let keep = |k: usize| match p.stride {
        Some(s) => k.is_multiple_of(s) || k == p.horizon,
        None => k == p.horizon,
    };
    rec.stage("solve");
    let mut totals = Vec::with_capacity(p.horizon + 1);
    let mut files = Vec::new();
    Solver::new(env).solve_with(anchor, p.horizon, orientation, |layer| {
        let k = layer.time();
        totals.push(expected_total(layer));
        if keep(k) {
            if matches!(p.format, LayerFormat::Csv | LayerFormat::Both) {
                let mut buf = Vec::new();
                layer_io::write_csv(layer, &mut buf)?;
                files.push((format!("layers/layer_{k:05}.csv"), buf));
            }
            if matches!(p.format, LayerFormat::Binary | LayerFormat::Both) {
                let mut buf = Vec::new();
                layer_io::write_binary(layer, &mut buf)?;
                files.push((format!("layers/layer_{k:05}.bin"), buf));
            }
        }
        Ok(())
    })?;
    rec.stage("write");
    for (rel, buf) in &files {
        rec.write(rel, buf)?;
    }
    let doc = json!({
        "anchor": coords(anchor, dim),
        "orientation": p.orientation,
        "horizon": p.horizon,
        "log_totals": totals.iter().map(|&t| finite(t)).collect::<Vec<_>>(),
        "layers": files.iter().map(|(r, _)| r.clone()).collect::<Vec<_>>(),
    });
    rec.write_json(SOLVE_JSON, &doc)?;
    Ok(Outcome::done(json!({
        "command": "solve",
        "layers_written": files.len(),
        "log_total_final": finite(*totals.last().unwrap_or(&0.0)),
    })))
}

pub fn shape(env: &EnvironmentField, p: &ShapeParams, rec: &mut Recorder) -> CliResult<Outcome> {
    let dim = env.dim();
    let radius = p.n as i64 * env.step_set().l0_max();
    let mut entries = Vec::with_capacity(p.deltas.len());
    for (i, &delta) in p.deltas.iter().enumerate() {
        rec.stage(&format!("passage_times[{i}]"));
        let ptm = passage_times(env, delta, radius)?;
        if ptm.boundary_contact() {
            rec.warn(format!("delta {delta}: passage-time ball touched its boundary"));
        }
        let est = shape_polytope(&ptm, p.n)?;
        let hull_csv = match &est.hull {
            Some(hull) => {
                let rel = format!("shape_hull_{i}.csv");
                let mut out = (1..=dim).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
                out.push('\n');
                for v in hull {
                    let row: Vec<String> = v.iter().map(|c| fmt_f64(*c)).collect();
                    writeln!(out, "{}", row.join(",")).unwrap();
                }
                rec.write(&rel, out.as_bytes())?;
                Some(rel)
            }
            None => {
                rec.warn(format!("delta {delta}: no hull in dimension {dim}"));
                None
            }
        };
        let hausdorff = est
            .hull
            .as_ref()
            .filter(|h| !h.is_empty())
            .and_then(|h| polytope_hausdorff_l1(h, &unit_l1_ball(dim)).ok());
        entries.push(ShapeEntry {
            delta,
            sites: est.sites.len(),
            boundary_contact: ptm.boundary_contact(),
            hull: est.hull.clone(),
            hausdorff_to_unit_ball: hausdorff,
            hull_csv,
        });
    }
    let doc = ShapeArtifact {
        dim,
        n: p.n,
        radius,
        entries,
    };
    rec.write_json(SHAPE_JSON, &doc)?;
    Ok(Outcome::done(json!({
        "command": "shape",
        "n": p.n,
        "deltas": p.deltas,
        "hausdorff_to_unit_ball": doc.entries.iter().map(|e| e.hausdorff_to_unit_ball).collect::<Vec<_>>(),
    })))
}

/// `{k / den : k ∈ Z^d, ||k||_1 <= radius}` in lexicographic order.
pub fn direction_grid(dim: usize, den: i64, radius: i64) -> Vec<RationalPoint> {
    let mut out = Vec::new();
    let mut k = vec![-radius; dim];
    loop {
        if k.iter().map(|c| c.abs()).sum::<i64>() <= radius {
            out.push(RationalPoint::from_ints(&k, den));
        }
        let mut i = dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if k[i] < radius {
                k[i] += 1;
                break;
            }
            k[i] = -radius;
        }
    }
}

pub fn beta(env: &EnvironmentField, p: &BetaParams, rec: &mut Recorder) -> CliResult<Outcome> {
    let dim = env.dim();
    let directions: Vec<RationalPoint> = match &p.directions {
        Some(list) => list.iter().map(|s| s.parse()).collect::<brwre_core::Result<_>>()?,
        None => direction_grid(dim, p.grid_denominator, p.grid_radius),
    };
    let solver = Solver::new(env);
    rec.stage("beta_profile");
    let profile = beta_profile_with(&solver, env, &directions, p.horizon)?;
    rec.stage("total_growth");
    let mut trace = Vec::with_capacity(p.horizon);
    solver.solve_with(Site::ORIGIN, p.horizon, Orientation::Forward, |layer| {
        if layer.time() > 0 {
            trace.push((layer.time(), expected_total(layer) / layer.time() as f64));
        }
        Ok(())
    })?;
    rec.stage("write");
    let header: String = (1..=dim).map(|k| format!("a{k},")).collect();
    let mut csv = format!("{header}k0,beta,n\n");
    let mut samples = format!("{header}k0,j,t,value\n");
    for e in &profile.grid {
        let a: String = e.a.to_f64().iter().map(|c| format!("{},", fmt_f64(*c))).collect();
        let n = e.samples.last().map_or(0, |(j, _)| e.k0 as usize * j);
        let value = if e.minus_infinity { f64::NEG_INFINITY } else { e.value };
        writeln!(csv, "{a}{},{},{n}", e.k0, fmt_f64(value)).unwrap();
        for &(j, v) in &e.samples {
            writeln!(samples, "{a}{},{j},{},{}", e.k0, e.k0 as usize * j, fmt_f64(v)).unwrap();
        }
    }
    rec.write(BETA_PROFILE_CSV, csv.as_bytes())?;
    rec.write(BETA_SAMPLES_CSV, samples.as_bytes())?;
    let mut hull_csv = (1..=dim).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",");
    hull_csv.push('\n');
    for v in &profile.b_hull {
        let row: Vec<String> = v.iter().map(|c| fmt_f64(*c)).collect();
        writeln!(hull_csv, "{}", row.join(",")).unwrap();
    }
    rec.write(B_HULL_CSV, hull_csv.as_bytes())?;
    let mut growth_csv = String::from("n,log_expected_total_rate\n");
    for (n, v) in &trace {
        writeln!(growth_csv, "{n},{}", fmt_f64(*v)).unwrap();
    }
    rec.write(TOTAL_GROWTH_CSV, growth_csv.as_bytes())?;

    let zero = RationalPoint::zero(dim);
    let beta0 = profile.find(&zero).map(|e| e.value);
    let verdict = match classify_by_beta(&profile, p.tol) {
        Ok(r) => r.as_str().to_string(),
        Err(_) => {
            rec.warn("origin is not on the direction grid; no verdict");
            "unavailable".to_string()
        }
    };
    let defect = profile.midpoint_concavity_defect();
    let doc = BetaArtifact {
        dim,
        horizon: p.horizon,
        tol: p.tol,
        directions: profile.grid.len(),
        beta0: beta0.and_then(finite),
        verdict: verdict.clone(),
        sup_beta: finite(profile.sup_beta),
        b_hull: profile.b_hull.clone(),
        concavity_defect: finite(defect),
        log_expected_total_rate: trace.last().map_or(0.0, |t| t.1),
    };
    rec.write_json(BETA_JSON, &doc)?;
    let inconclusive = verdict == Recurrence::Inconclusive.as_str() || verdict == "unavailable";
    Ok(Outcome {
        stdout: serde_json::to_value(&doc)?,
        inconclusive,
    })
}

pub fn classify(spec: &EnvironmentSpec, p: &ClassifyParams, rec: &mut Recorder) -> CliResult<Outcome> {
    rec.stage("criterion");
    let dim = spec.dim();
    let doc = if spec.dependence != Dependence::Iid {
        rec.warn("criterion needs an i.i.d. environment; use the beta verdict");
        ClassifyArtifact {
            applicable: false,
            verdict: "not_applicable".into(),
            tol: p.tol,
            value: None,
            log_value: None,
            t_star: vec![0.0; dim],
            witness_law: None,
            gradient_norm: None,
            on_boundary: false,
        }
    } else {
        let (index, laws): (Vec<usize>, Vec<SiteLaw>) =
            spec.essential_support().map(|(i, l)| (i, l.clone())).unzip();
        let r = transience_criterion(&laws, p.tol)?;
        if r.on_boundary {
            rec.warn("criterion minimiser reached the search radius");
        }
        ClassifyArtifact {
            applicable: true,
            verdict: r.verdict.as_str().to_string(),
            tol: p.tol,
            value: finite(r.value),
            log_value: finite(r.log_value),
            t_star: r.t_star.clone(),
            witness_law: Some(index[r.witness_law]),
            gradient_norm: finite(r.gradient_norm),
            on_boundary: r.on_boundary,
        }
    };
    rec.write_json(CLASSIFY_JSON, &doc)?;
    let inconclusive = doc.verdict == CriterionVerdict::Boundary.as_str();
    Ok(Outcome {
        stdout: serde_json::to_value(&doc)?,
        inconclusive,
    })
}

#[derive(Clone, Default)]
struct Moments {
    k: u64,
    sum: f64,
    sumsq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.k += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn merge(&mut self, o: &Moments) {
        self.k += o.k;
        self.sum += o.sum;
        self.sumsq += o.sumsq;
    }

    fn mean(&self) -> f64 {
        if self.k == 0 {
            f64::NAN
        } else {
            self.sum / self.k as f64
        }
    }

    /// Mean with a normal 95% band.
    fn band(&self) -> Band {
        let m = self.mean();
        let half = if self.k >= 2 {
            let var = ((self.sumsq - self.k as f64 * m * m) / (self.k - 1) as f64).max(0.0);
            1.96 * (var / self.k as f64).sqrt()
        } else {
            0.0
        };
        Band {
            mean: finite(m),
            ci_low: finite(m - half),
            ci_high: finite(m + half),
        }
    }
}

/// Per-batch accumulators, merged in batch order.
#[derive(Clone)]
struct SimAccum {
    log_total: Vec<Moments>,
    occupied: Vec<Moments>,
    /// `[n][site]`: `ln η_n(x)` over occupying runs.
    eta: Vec<Vec<Moments>>,
    extinct: u64,
    stats: SamplerStats,
}

impl SimAccum {
    fn new(horizon: usize, tracked: usize) -> SimAccum {
        SimAccum {
            log_total: vec![Moments::default(); horizon + 1],
            occupied: vec![Moments::default(); horizon + 1],
            eta: vec![vec![Moments::default(); tracked]; horizon + 1],
            extinct: 0,
            stats: SamplerStats::default(),
        }
    }

    fn merge(&mut self, o: &SimAccum) {
        for (a, b) in self.log_total.iter_mut().zip(&o.log_total) {
            a.merge(b);
        }
        for (a, b) in self.occupied.iter_mut().zip(&o.occupied) {
            a.merge(b);
        }
        for (row, orow) in self.eta.iter_mut().zip(&o.eta) {
            for (a, b) in row.iter_mut().zip(orow) {
                a.merge(b);
            }
        }
        self.extinct += o.extinct;
        self.stats.merge(&o.stats);
    }
}

pub fn simulate(env: &EnvironmentField, p: &SimulateParams, rec: &mut Recorder) -> CliResult<Outcome> {
    let dim = env.dim();
    let start = parse_site(&p.start, dim)?;
    let tracked: Vec<Site> = if p.track.is_empty() {
        vec![start]
    } else {
        p.track.iter().map(|t| parse_site(t, dim)).collect::<CliResult<_>>()?
    };
    let streams = StreamFactory::new(env.spec().master_seed);
    let cfg = SimulationConfig {
        bit_budget: p.bit_budget,
    };
    rec.stage("simulate");
    let mut acc = SimAccum::new(p.horizon, tracked.len());
    let mut lo = 0;
    while lo < p.replicas {
        let hi = (lo + SIM_BATCH).min(p.replicas);
        let parts: Vec<SimAccum> = (lo..hi)
            .into_par_iter()
            .map(|r| -> brwre_core::Result<SimAccum> {
                let mut rng = streams.stream(r, StreamPurpose::Branching);
                let t = run(env, start, p.horizon, &mut rng, &cfg)?;
                let mut one = SimAccum::new(p.horizon, tracked.len());
                for s in &t.states {
                    if s.is_extinct() {
                        continue;
                    }
                    one.log_total[s.time].push(ln_biguint(&s.total));
                    one.occupied[s.time].push(s.occupied() as f64);
                    for (i, x) in tracked.iter().enumerate() {
                        if let Some(c) = s.counts.get(x) {
                            one.eta[s.time][i].push(ln_biguint(c));
                        }
                    }
                }
                if t.last().is_extinct() {
                    one.extinct = 1;
                }
                one.stats = t.stats;
                Ok(one)
            })
            .collect::<brwre_core::Result<_>>()?;
        for part in &parts {
            acc.merge(part);
        }
        lo = hi;
    }
    rec.stage("write");
    let labels: Vec<String> = tracked
        .iter()
        .map(|x| x.coords(dim).iter().map(|c| c.to_string()).collect::<Vec<_>>().join("_"))
        .collect();
    let mut csv = String::from("n,runs,mean_log_total,mean_log_total_rate,mean_occupied");
    for l in &labels {
        write!(csv, ",occupancy_{l},mean_log_eta_{l}").unwrap();
    }
    csv.push('\n');
    for n in 0..=p.horizon {
        let lt = &acc.log_total[n];
        let rate = if n == 0 { 0.0 } else { lt.mean() / n as f64 };
        write!(
            csv,
            "{n},{},{},{},{}",
            lt.k,
            fmt_f64(lt.mean()),
            fmt_f64(rate),
            fmt_f64(acc.occupied[n].mean())
        )
        .unwrap();
        for m in &acc.eta[n] {
            let occ = m.k as f64 / p.replicas as f64;
            write!(csv, ",{},{}", fmt_f64(occ), fmt_f64(m.mean())).unwrap();
        }
        csv.push('\n');
    }
    rec.write(TRAJECTORIES_CSV, csv.as_bytes())?;

    let h = p.horizon as f64;
    let scale = |b: Band| Band {
        mean: b.mean.map(|v| v / h),
        ci_low: b.ci_low.map(|v| v / h),
        ci_high: b.ci_high.map(|v| v / h),
    };
    let stats = acc.stats;
    if stats.normal_draws > 0 {
        rec.warn(format!(
            "normal fast path used for {} draws (max Berry-Esseen bound {:.3e})",
            stats.normal_draws, stats.max_berry_esseen
        ));
    }
    if stats.poisson_draws > 0 {
        rec.warn(format!("Poisson fast path used for {} draws", stats.poisson_draws));
    }
    let doc = SimulateArtifact {
        start: coords(start, dim),
        horizon: p.horizon,
        replicas: p.replicas,
        master_seed: streams.master_seed(),
        bit_budget: p.bit_budget,
        sampler: SamplerDoc {
            exact_draws: stats.exact_draws,
            normal_draws: stats.normal_draws,
            poisson_draws: stats.poisson_draws,
            max_berry_esseen: stats.max_berry_esseen,
        },
        extinct_runs: acc.extinct,
        log_total_rate: scale(acc.log_total[p.horizon].band()),
        tracked: tracked
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let m = &acc.eta[p.horizon][i];
                TrackedSite {
                    site: coords(*x, dim),
                    occupied_runs: m.k,
                    occupancy: m.k as f64 / p.replicas as f64,
                    exponent: scale(m.band()),
                }
            })
            .collect(),
    };
    rec.write_json(SIMULATE_JSON, &doc)?;
    Ok(Outcome::done(serde_json::to_value(&doc)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_lattice_points_of_the_l1_ball() {
        // |{k ∈ Z^2 : ||k||_1 <= r}| = 2r(r+1) + 1
        for r in 0..6 {
            assert_eq!(direction_grid(2, 4, r).len() as i64, 2 * r * (r + 1) + 1);
        }
        let g = direction_grid(1, 10, 3);
        assert_eq!(g.len(), 7);
        assert!(g.contains(&RationalPoint::zero(1)));
        assert_eq!(direction_grid(3, 2, 1).len(), 7);
    }

    #[test]
    fn band_of_constant_samples_is_tight() {
        let mut m = Moments::default();
        for _ in 0..10 {
            m.push(0.5);
        }
        let b = m.band();
        assert_eq!(b.mean, Some(0.5));
        assert!((b.ci_high.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(Moments::default().band().mean, None);
    }
}
