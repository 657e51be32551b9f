//! Consolidates an output directory into `summary.txt` and a set of SVGs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::artifacts::*;
use crate::config::{CommandDoc, ConfigDoc};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_file, Recorder, RunManifest, MANIFEST_FILE};
use crate::svg::{diverging, range, Plot, PALETTE};

/// Commands in the order they appear in the summary.
const COMMAND_ORDER: &[&str] = &["check", "solve", "shape", "beta", "classify", "simulate"];

struct Inputs {
    conditions: ConditionsArtifact,
    shape: ShapeArtifact,
    beta: BetaArtifact,
    profile: Vec<Vec<f64>>,
    b_hull: Vec<Vec<f64>>,
    growth: Vec<Vec<f64>>,
    classify: ClassifyArtifact,
    simulate: SimulateArtifact,
    trajectories: Vec<Vec<f64>>,
}

fn files_under(dir: &Path) -> CliResult<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("under dir");
                let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.insert(parts.join("/"));
            }
        }
    }
    Ok(out)
}

fn read_json<T: DeserializeOwned>(dir: &Path, rel: &str) -> CliResult<T> {
    let text = fs::read_to_string(dir.join(rel))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{rel}: {e}")))
}

/// Numeric rows of a CSV with a header line.
fn read_csv(dir: &Path, rel: &str) -> CliResult<Vec<Vec<f64>>> {
    let text = fs::read_to_string(dir.join(rel))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Runtime(format!("{rel} line {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Checks presence, manifest coverage and hashes, then loads everything.
fn load(dir: &Path) -> CliResult<(RunManifest, Inputs)> {
    let manifest = if dir.is_dir() { RunManifest::load(dir)? } else { None };
    let Some(manifest) = manifest else {
        let mut missing = vec![MANIFEST_FILE.to_string()];
        missing.extend(REPORT_INPUTS.iter().map(|s| s.to_string()));
        return Err(CliError::MissingArtifacts(missing));
    };
    let missing: Vec<String> = REPORT_INPUTS
        .iter()
        .filter(|rel| !dir.join(rel).is_file() || manifest.find(rel).is_none())
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::MissingArtifacts(missing));
    }
    let known: BTreeSet<&str> = manifest.artifact_paths().collect();
    let orphans: Vec<String> = files_under(dir)?
        .into_iter()
        .filter(|f| f != MANIFEST_FILE && !known.contains(f.as_str()))
        .collect();
    if !orphans.is_empty() {
        return Err(CliError::OrphanFiles(orphans));
    }
    for rel in REPORT_INPUTS {
        let entry = manifest.find(rel).expect("checked above");
        if sha256_file(&dir.join(rel))? != entry.sha256 {
            return Err(CliError::HashMismatch { path: rel.to_string() });
        }
    }
    let inputs = Inputs {
        conditions: read_json(dir, CONDITIONS_JSON)?,
        shape: read_json(dir, SHAPE_JSON)?,
        beta: read_json(dir, BETA_JSON)?,
        profile: read_csv(dir, BETA_PROFILE_CSV)?,
        b_hull: read_csv(dir, B_HULL_CSV)?,
        growth: read_csv(dir, TOTAL_GROWTH_CSV)?,
        classify: read_json(dir, CLASSIFY_JSON)?,
        simulate: read_json(dir, SIMULATE_JSON)?,
        trajectories: read_csv(dir, TRAJECTORIES_CSV)?,
    };
    Ok((manifest, inputs))
}

fn num(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.6}"))
}

fn holds(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "FAILS"
    }
}

fn point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|c| format!("{c:.4}")).collect();
    format!("({})", parts.join(", "))
}

fn summary(manifest: &RunManifest, inp: &Inputs) -> String {
    let mut s = String::new();
    let env_run = manifest.runs.iter().find(|r| r.command != "report").expect("inputs imply runs");
    let env = &env_run.config.environment;
    let dep = match env.dependence.window_radius {
        Some(w) if w > 0 => format!("block window, radius {w}"),
        _ => "i.i.d.".to_string(),
    };
    writeln!(s, "BRWRE experiment summary").unwrap();
    writeln!(s).unwrap();
    writeln!(s, "environment").unwrap();
    writeln!(s, "  dimension      {}", env.dimension).unwrap();
    writeln!(s, "  step set size  {}", env.step_set.len()).unwrap();
    writeln!(s, "  laws           {}", env.laws.len()).unwrap();
    writeln!(s, "  dependence     {dep}").unwrap();
    writeln!(s, "  seed           {}", env.seed).unwrap();
    writeln!(s).unwrap();

    writeln!(s, "runs").unwrap();
    for name in COMMAND_ORDER {
        if let Some(r) = manifest.runs.iter().find(|r| r.command == *name) {
            writeln!(s, "  {:<9} config {}  seed {}  version {}", name, &r.config_hash[..16], r.master_seed, r.code_version)
                .unwrap();
        }
    }
    writeln!(s).unwrap();

    let c = &inp.conditions;
    writeln!(s, "standing conditions").unwrap();
    writeln!(s, "  branching              {}", holds(c.holds_b)).unwrap();
    writeln!(s, "  uniform ellipticity    {}  epsilon0 = {}", holds(c.holds_ue), num(c.epsilon0)).unwrap();
    writeln!(s, "  bounded mean           {}  d0 = {}", holds(c.holds_d), num(c.d0)).unwrap();
    writeln!(s, "  aperiodicity           {}", holds(c.holds_a)).unwrap();
    writeln!(s, "  dependence range rho   {}", c.rho).unwrap();
    writeln!(s).unwrap();

    writeln!(s, "shape estimates (n = {}, radius {})", inp.shape.n, inp.shape.radius).unwrap();
    writeln!(s, "  {:>8}  {:>8}  {:>10}  {:>9}  boundary", "delta", "sites", "vertices", "d_H(B1)").unwrap();
    for e in &inp.shape.entries {
        writeln!(
            s,
            "  {:>8.4}  {:>8}  {:>10}  {:>9}  {}",
            e.delta,
            e.sites,
            e.hull.as_ref().map_or("n/a".into(), |h| h.len().to_string()),
            num(e.hausdorff_to_unit_ball),
            if e.boundary_contact { "touched" } else { "clear" }
        )
        .unwrap();
    }
    writeln!(s).unwrap();

    let b = &inp.beta;
    writeln!(s, "local growth exponent (horizon {}, {} directions)", b.horizon, b.directions).unwrap();
    writeln!(s, "  beta(0)            {}", num(b.beta0)).unwrap();
    writeln!(s, "  sup beta           {}", num(b.sup_beta)).unwrap();
    writeln!(s, "  concavity defect   {}", num(b.concavity_defect)).unwrap();
    let hull: Vec<String> = b.b_hull.iter().map(|p| point(p)).collect();
    writeln!(s, "  B hull             {}", if hull.is_empty() { "empty".into() } else { hull.join(" ") }).unwrap();
    writeln!(s).unwrap();

    let k = &inp.classify;
    writeln!(s, "recurrence verdicts").unwrap();
    writeln!(s, "  {:<28}  {:<14}  statistic", "classifier", "verdict").unwrap();
    writeln!(s, "  {:<28}  {:<14}  beta(0) = {} (tol {})", "growth exponent at 0", b.verdict, num(b.beta0), b.tol).unwrap();
    writeln!(s, "  {:<28}  {:<14}  value = {} (tol {:e})", "explicit criterion", k.verdict, num(k.value), k.tol).unwrap();
    let decided = |v: &str| v == "recurrent" || v == "transient";
    let agreement = if decided(&b.verdict) && decided(&k.verdict) {
        if b.verdict == k.verdict {
            "agree"
        } else {
            "DISAGREE"
        }
    } else {
        "not comparable"
    };
    writeln!(s, "  agreement: {agreement}").unwrap();
    writeln!(s).unwrap();

    let m = &inp.simulate;
    writeln!(s, "total population growth").unwrap();
    writeln!(s, "  ln E Z_n / n   at n = {:<5}  {:.6}  (exact)", b.horizon, b.log_expected_total_rate).unwrap();
    writeln!(
        s,
        "  ln Z_n / n     at n = {:<5}  {}  95% band [{}, {}]  ({} replicas, {} extinct)",
        m.horizon,
        num(m.log_total_rate.mean),
        num(m.log_total_rate.ci_low),
        num(m.log_total_rate.ci_high),
        m.replicas,
        m.extinct_runs
    )
    .unwrap();
    for t in &m.tracked {
        writeln!(
            s,
            "  ln eta_n(x) / n at x = {:<10} {}  occupancy {:.4}",
            format!("{:?}", t.site),
            num(t.exponent.mean),
            t.occupancy
        )
        .unwrap();
    }
    writeln!(
        s,
        "  sampler draws: exact {}, normal {}, poisson {}; max Berry-Esseen bound {:.3e}",
        m.sampler.exact_draws, m.sampler.normal_draws, m.sampler.poisson_draws, m.sampler.max_berry_esseen
    )
    .unwrap();
    writeln!(s).unwrap();

    writeln!(s, "warnings").unwrap();
    let mut any = false;
    for name in COMMAND_ORDER {
        for r in manifest.runs.iter().filter(|r| r.command == *name) {
            for w in &r.warnings {
                writeln!(s, "  [{name}] {w}").unwrap();
                any = true;
            }
        }
    }
    if !any {
        writeln!(s, "  none").unwrap();
    }
    s
}

fn xy(p: &[f64]) -> (f64, f64) {
    (p[0], p.get(1).copied().unwrap_or(0.0))
}

fn shape_svg(inp: &Inputs) -> String {
    let dim = inp.shape.dim;
    let title = format!("shape hulls W(n)/n, n = {}", inp.shape.n);
    match dim {
        1 => {
            let ys: Vec<f64> = inp.shape.entries.iter().map(|e| e.delta).collect();
            let mut plot = Plot::new(&title, (-1.2, 1.2), range(ys.iter().copied().chain([0.0, 1.0])));
            plot.polyline(&[(-1.0, 0.0), (1.0, 0.0)], "#888888", true);
            for (i, e) in inp.shape.entries.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                if let Some(h) = &e.hull {
                    let pts: Vec<(f64, f64)> = h.iter().map(|p| (p[0], e.delta)).collect();
                    plot.polyline(&pts, color, false);
                    plot.markers(&pts, color);
                }
                plot.label(&format!("delta = {}", e.delta), color);
            }
            plot.finish("x / n", "delta")
        }
        2 => {
            let mut plot = Plot::new(&title, (-1.2, 1.2), (-1.2, 1.2));
            plot.polygon(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)], "#888888", true);
            plot.label("unit l1 ball", "#888888");
            for (i, e) in inp.shape.entries.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                if let Some(h) = &e.hull {
                    let pts: Vec<(f64, f64)> = h.iter().map(|p| xy(p)).collect();
                    plot.polygon(&pts, color, false);
                }
                plot.label(&format!("delta = {}", e.delta), color);
            }
            plot.finish("x1 / n", "x2 / n")
        }
        _ => Plot::new(&format!("{title} (no hulls in dimension {dim})"), (-1.0, 1.0), (-1.0, 1.0)).finish("", ""),
    }
}

fn beta_svg(inp: &Inputs) -> String {
    let dim = inp.beta.dim;
    let title = format!("local growth exponent, horizon {}", inp.beta.horizon);
    let rows = &inp.profile;
    match dim {
        1 => {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[2])).collect();
            let mut plot = Plot::new(&title, range(pts.iter().map(|p| p.0)), range(pts.iter().map(|p| p.1).chain([0.0])));
            plot.hline(0.0, "#888888");
            plot.polyline(&pts, PALETTE[0], false);
            plot.markers(&pts, PALETTE[0]);
            plot.finish("a", "beta(a)")
        }
        2 => {
            let vals: Vec<f64> = rows.iter().map(|r| r[3]).filter(|v| v.is_finite()).collect();
            let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let step = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let step = if step.is_finite() { step } else { 0.1 };
            let mut plot = Plot::new(
                &format!("{title} (red > 0 > blue, |max| = {scale:.3})"),
                range(rows.iter().map(|r| r[0])),
                range(rows.iter().map(|r| r[1])),
            );
            for r in rows {
                plot.cell(r[0], r[1], step, step, &diverging(r[3], scale));
            }
            plot.finish("a1", "a2")
        }
        _ => {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[..dim].iter().map(|c| c.abs()).sum(), r[dim + 1])).collect();
            let mut plot = Plot::new(&title, range(pts.iter().map(|p| p.0)), range(pts.iter().map(|p| p.1).chain([0.0])));
            plot.hline(0.0, "#888888");
            plot.markers(&pts, PALETTE[0]);
            plot.finish("||a||_1", "beta(a)")
        }
    }
}

fn b_hull_svg(inp: &Inputs) -> String {
    let dim = inp.beta.dim;
    let title = "estimated B = {beta >= 0}";
    let hull = &inp.b_hull;
    match dim {
        1 => {
            let mut plot = Plot::new(title, (-1.2, 1.2), (-1.0, 1.0));
            let pts: Vec<(f64, f64)> = hull.iter().map(|p| (p[0], 0.0)).collect();
            plot.polyline(&[(-1.0, 0.0), (1.0, 0.0)], "#888888", true);
            plot.polyline(&pts, PALETTE[1], false);
            plot.markers(&pts, PALETTE[1]);
            plot.finish("a", "")
        }
        2 => {
            let mut plot = Plot::new(title, (-1.2, 1.2), (-1.2, 1.2));
            plot.polygon(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)], "#888888", true);
            let pts: Vec<(f64, f64)> = hull.iter().map(|p| xy(p)).collect();
            plot.polygon(&pts, PALETTE[1], false);
            plot.finish("a1", "a2")
        }
        _ => Plot::new(&format!("{title} (not drawn in dimension {dim})"), (-1.0, 1.0), (-1.0, 1.0)).finish("", ""),
    }
}

fn growth_svg(inp: &Inputs) -> String {
    let exact: Vec<(f64, f64)> = inp.growth.iter().map(|r| (r[0], r[1])).collect();
    let mc: Vec<(f64, f64)> = inp.trajectories.iter().filter(|r| r[0] >= 1.0).map(|r| (r[0], r[3])).collect();
    let mut plot = Plot::new(
        "total population growth rate",
        range(exact.iter().chain(&mc).map(|p| p.0)),
        range(exact.iter().chain(&mc).map(|p| p.1)),
    );
    plot.polyline(&exact, PALETTE[0], false);
    plot.label("ln E Z_n / n", PALETTE[0]);
    plot.polyline(&mc, PALETTE[1], false);
    plot.label("mean ln Z_n / n (simulated)", PALETTE[1]);
    plot.finish("n", "rate")
}

/// Builds the report for `dir`. `config` supplies the manifest record; when
/// absent the environment of an earlier run is reused.
pub fn report(dir: &Path, config: Option<&ConfigDoc>) -> CliResult<String> {
    let (manifest, inputs) = load(dir)?;
    let mut cfg = match config {
        Some(c) => c.clone(),
        None => manifest
            .runs
            .iter()
            .find(|r| r.command != "report")
            .map(|r| r.config.clone())
            .expect("inputs imply runs"),
    };
    cfg.command = CommandDoc::Report;
    cfg.output_dir = dir.to_path_buf();
    let mut rec = Recorder::new(dir)?;
    rec.stage("summary");
    let text = summary(&manifest, &inputs);
    rec.write(SUMMARY_TXT, text.as_bytes())?;
    rec.stage("plots");
    rec.write(SHAPE_SVG, shape_svg(&inputs).as_bytes())?;
    rec.write(BETA_SVG, beta_svg(&inputs).as_bytes())?;
    rec.write(B_HULL_SVG, b_hull_svg(&inputs).as_bytes())?;
    rec.write(GROWTH_SVG, growth_svg(&inputs).as_bytes())?;
    rec.finish(&cfg)?;
    Ok(text)
}
