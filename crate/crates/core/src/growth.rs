//! Local growth exponent `β(a)`, the set `B = {β ≥ 0}` and total growth.
//!
//! `β(a)` is estimated as `ln E_ω η_{k0 j}(k0 j a) / (k0 j)` with `k0` the
//! smallest positive even integer such that `k0 a ∈ 2Z^d`. The even multiplier
//! keeps the target on the parity class the walk can occupy at even times.
//! The estimate reported is the largest-`j` sample; the whole sample path is
//! kept so convergence can be inspected.

use std::collections::HashMap;

use crate::environment::EnvironmentField;
use crate::error::{Error, Result};
use crate::expectation::{expected_total, Orientation, Solver};
use crate::geometry::{convex_hull_points, Point};
use crate::lattice::Site;
use crate::rational::RationalPoint;

/// Default half-width of the inconclusive band in [`classify_by_beta`].
pub const DEFAULT_BETA_TOL: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct BetaEstimate {
    pub a: RationalPoint,
    pub k0: i64,
    /// `(j, ln m_{k0 j}(k0 j a) / (k0 j))` for reachable targets only.
    pub samples: Vec<(usize, f64)>,
    pub value: f64,
    /// No sampled target was reachable.
    pub minus_infinity: bool,
}

#[derive(Clone, Debug)]
pub struct BetaProfile {
    pub grid: Vec<BetaEstimate>,
    /// Time horizon of the shared solve.
    pub horizon: usize,
    /// Hull of the estimated `B = {β ≥ 0}` (interval for d = 1, polygon for d = 2).
    pub b_hull: Vec<Point>,
    pub sup_beta: f64,
}

impl BetaProfile {
    pub fn find(&self, a: &RationalPoint) -> Option<&BetaEstimate> {
        self.grid.iter().find(|e| &e.a == a)
    }

    /// Largest `(β̂(a) + β̂(b)) / 2 - β̂(mid)` over grid triples with the
    /// midpoint on the grid (finite values only). `β` is concave, so this is
    /// at most zero up to finite-size error.
    pub fn midpoint_concavity_defect(&self) -> f64 {
        let by_point: HashMap<&RationalPoint, f64> = self
            .grid
            .iter()
            .filter(|e| !e.minus_infinity)
            .map(|e| (&e.a, e.value))
            .collect();
        let mut worst = f64::NEG_INFINITY;
        let finite: Vec<&BetaEstimate> = self.grid.iter().filter(|e| !e.minus_infinity).collect();
        for (i, a) in finite.iter().enumerate() {
            for b in &finite[i + 1..] {
                if let Some(&mid) = by_point.get(&a.a.midpoint(&b.a)) {
                    worst = worst.max(0.5 * (a.value + b.value) - mid);
                }
            }
        }
        worst
    }
}

struct Tracker {
    a: RationalPoint,
    k0: i64,
    j_max: usize,
    samples: Vec<(usize, f64)>,
}

fn estimates_from_shared_solve(
    solver: &Solver<'_>,
    trackers: &mut [Tracker],
) -> Result<usize> {
    let horizon = trackers
        .iter()
        .map(|t| t.k0 as usize * t.j_max)
        .max()
        .unwrap_or(0);
    solver.solve_with(Site::ORIGIN, horizon, Orientation::Forward, |layer| {
        let t = layer.time();
        if t == 0 {
            return Ok(());
        }
        for tr in trackers.iter_mut() {
            let k0 = tr.k0 as usize;
            if t % k0 != 0 || t / k0 > tr.j_max {
                continue;
            }
            let j = t / k0;
            let target = tr.a.scaled_site(tr.k0 * j as i64)?;
            let v = layer.get(target);
            if v > f64::NEG_INFINITY {
                tr.samples.push((j, v / t as f64));
            }
        }
        Ok(())
    })?;
    Ok(horizon)
}

fn finish(tr: Tracker) -> BetaEstimate {
    let (value, minus_infinity) = match tr.samples.last() {
        Some(&(_, v)) => (v, false),
        None => (f64::NEG_INFINITY, true),
    };
    BetaEstimate {
        a: tr.a,
        k0: tr.k0,
        samples: tr.samples,
        value,
        minus_infinity,
    }
}

fn check_direction(env: &EnvironmentField, a: &RationalPoint) -> Result<()> {
    if a.dim() != env.dim() {
        return Err(Error::InvalidArgument(format!(
            "direction {a} has dimension {}, environment has {}",
            a.dim(),
            env.dim()
        )));
    }
    Ok(())
}

/// `β̂(a)` from `j = 1..=n` samples, i.e. a solve to time `k0 n`.
pub fn beta_estimate(env: &EnvironmentField, a: &RationalPoint, n: usize) -> Result<BetaEstimate> {
    beta_estimate_with(&Solver::new(env), env, a, n)
}

pub fn beta_estimate_with(
    solver: &Solver<'_>,
    env: &EnvironmentField,
    a: &RationalPoint,
    n: usize,
) -> Result<BetaEstimate> {
    check_direction(env, a)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let mut trackers = [Tracker {
        a: a.clone(),
        k0: a.even_lattice_multiplier(),
        j_max: n,
        samples: Vec::new(),
    }];
    estimates_from_shared_solve(solver, &mut trackers)?;
    let [tr] = trackers;
    Ok(finish(tr))
}

/// Estimates `β̂` on every direction from one solve to `horizon`; direction
/// `a` uses `j = 1..=⌊horizon / k0(a)⌋`.
pub fn beta_profile(
    env: &EnvironmentField,
    directions: &[RationalPoint],
    horizon: usize,
) -> Result<BetaProfile> {
    beta_profile_with(&Solver::new(env), env, directions, horizon)
}

pub fn beta_profile_with(
    solver: &Solver<'_>,
    env: &EnvironmentField,
    directions: &[RationalPoint],
    horizon: usize,
) -> Result<BetaProfile> {
    if directions.is_empty() {
        return Err(Error::InvalidArgument("no directions given".into()));
    }
    let mut trackers = Vec::with_capacity(directions.len());
    for a in directions {
        check_direction(env, a)?;
        let k0 = a.even_lattice_multiplier();
        let j_max = horizon / k0 as usize;
        if j_max == 0 {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} is below k0 = {k0} for direction {a}"
            )));
        }
        trackers.push(Tracker {
            a: a.clone(),
            k0,
            j_max,
            samples: Vec::new(),
        });
    }
    estimates_from_shared_solve(solver, &mut trackers)?;
    let grid: Vec<BetaEstimate> = trackers.into_iter().map(finish).collect();
    let sup_beta = grid.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    let b_hull = b_hull(&grid);
    Ok(BetaProfile {
        grid,
        horizon,
        b_hull,
        sup_beta,
    })
}

/// Grid points with `β̂ ≥ 0` together with the linear-interpolation zero
/// crossings between axis-neighbours on the grid, then their hull.
fn b_hull(grid: &[BetaEstimate]) -> Vec<Point> {
    let dim = grid.first().map_or(1, |e| e.a.dim());
    let mut pts: Vec<Point> = Vec::new();
    for e in grid.iter().filter(|e| e.value >= 0.0) {
        pts.push(e.a.to_f64());
    }
    for (i, a) in grid.iter().enumerate() {
        if a.value < 0.0 || a.minus_infinity {
            continue;
        }
        for (j, b) in grid.iter().enumerate() {
            if i == j || b.value >= 0.0 || !are_axis_neighbours(grid, i, j) {
                continue;
            }
            let pa = a.a.to_f64();
            let pb = b.a.to_f64();
            let s = if b.minus_infinity {
                0.0
            } else {
                a.value / (a.value - b.value)
            };
            pts.push(pa.iter().zip(&pb).map(|(x, y)| x + s * (y - x)).collect());
        }
    }
    if pts.is_empty() {
        return pts;
    }
    match dim {
        1 => {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                vec![vec![lo]]
            } else {
                vec![vec![lo], vec![hi]]
            }
        }
        2 => convex_hull_points(&pts),
        _ => pts,
    }
}

/// Grid points `i`, `j` differ in one coordinate with no grid point strictly
/// between them on that line.
fn are_axis_neighbours(grid: &[BetaEstimate], i: usize, j: usize) -> bool {
    let a = grid[i].a.coords();
    let b = grid[j].a.coords();
    let differing: Vec<usize> = (0..a.len()).filter(|&k| a[k] != b[k]).collect();
    if differing.len() != 1 {
        return false;
    }
    let k = differing[0];
    let (lo, hi) = if a[k] < b[k] { (a[k], b[k]) } else { (b[k], a[k]) };
    !grid.iter().any(|e| {
        let c = e.a.coords();
        (0..c.len()).all(|m| m == k || c[m] == a[m]) && c[k] > lo && c[k] < hi
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recurrence {
    Recurrent,
    Transient,
    Inconclusive,
}

impl Recurrence {
    pub fn as_str(&self) -> &'static str {
        match self {
            Recurrence::Recurrent => "recurrent",
            Recurrence::Transient => "transient",
            Recurrence::Inconclusive => "inconclusive",
        }
    }
}

/// Recurrent iff `β̂(0) > tol`, transient iff `β̂(0) < -tol`.
pub fn classify_by_beta(profile: &BetaProfile, tol: f64) -> Result<Recurrence> {
    let dim = profile.grid.first().map_or(1, |e| e.a.dim());
    let zero = RationalPoint::zero(dim);
    let est = profile
        .find(&zero)
        .ok_or_else(|| Error::NotOnGrid(zero.to_string()))?;
    Ok(classify_value(est.value, tol))
}

pub fn classify_value(beta0: f64, tol: f64) -> Recurrence {
    if beta0 > tol {
        Recurrence::Recurrent
    } else if beta0 < -tol {
        Recurrence::Transient
    } else {
        Recurrence::Inconclusive
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TotalGrowth {
    /// `ln E_ω 𝒵_n / n`.
    pub log_expected: f64,
    /// `log_expected - sup β̂` when a profile was supplied.
    pub sup_beta_gap: Option<f64>,
    /// Whether the supplied profile has a strictly positive maximum.
    pub sup_beta_positive: Option<bool>,
}

pub fn total_growth(
    env: &EnvironmentField,
    n: usize,
    profile: Option<&BetaProfile>,
) -> Result<TotalGrowth> {
    total_growth_with(&Solver::new(env), n, profile)
}

pub fn total_growth_with(
    solver: &Solver<'_>,
    n: usize,
    profile: Option<&BetaProfile>,
) -> Result<TotalGrowth> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let last = solver.solve_with(Site::ORIGIN, n, Orientation::Forward, |_| Ok(()))?;
    let log_expected = expected_total(&last) / n as f64;
    Ok(TotalGrowth {
        log_expected,
        sup_beta_gap: profile.map(|p| log_expected - p.sup_beta),
        sup_beta_positive: profile.map(|p| p.sup_beta > 0.0),
    })
}
