//! Passage times through δ-open edges, reachable sets and shape estimates.
//!
//! An edge `x → x + y` is δ-open when `ω_x(v : v_y ≥ 1) > δ`. The passage
//! time `T^δ(x, z)` is the length of the shortest path of δ-open edges from
//! `x` to `z`; the sets `W(n) = {z : T^δ(0, z) ≤ n}` scaled by `1/n`
//! approximate the shape `F_δ`.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::environment::EnvironmentField;
use crate::error::{Error, Result};
use crate::geometry::{scaled_hull, Point};
use crate::lattice::{BoxRegion, Site};
use crate::rational::RationalPoint;

/// `T^δ(origin, ·)` on the l1-ball of the given radius around `origin`.
#[derive(Clone, Debug)]
pub struct PassageTimeMap {
    delta: f64,
    origin: Site,
    radius: i64,
    region: BoxRegion,
    times: Vec<Option<u32>>,
    boundary_contact: bool,
}

impl PassageTimeMap {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn origin(&self) -> Site {
        self.origin
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    /// Whether some open edge left the ball; if so an infinite entry may only
    /// mean "not reached inside the ball".
    pub fn boundary_contact(&self) -> bool {
        self.boundary_contact
    }

    pub fn in_ball(&self, x: Site) -> bool {
        (x - self.origin).l1() <= self.radius
    }

    /// Finite passage time, or `None` when unreached (or outside the ball).
    pub fn get(&self, x: Site) -> Option<u32> {
        if !self.in_ball(x) {
            return None;
        }
        self.region.index(&x).and_then(|i| self.times[i])
    }

    /// All reached sites with their passage times.
    pub fn reached(&self) -> impl Iterator<Item = (Site, u32)> + '_ {
        self.times
            .iter()
            .enumerate()
            .filter_map(move |(i, t)| t.map(|t| (self.region.site_at(i), t)))
    }
}

pub fn passage_times(env: &EnvironmentField, delta: f64, radius: i64) -> Result<PassageTimeMap> {
    passage_times_from(env, Site::ORIGIN, delta, radius)
}

/// Breadth-first search over δ-open edges, one frontier level at a time.
pub fn passage_times_from(
    env: &EnvironmentField,
    origin: Site,
    delta: f64,
    radius: i64,
) -> Result<PassageTimeMap> {
    if radius <= 0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if delta.is_nan() || delta < 0.0 || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta must be finite and >= 0, got {delta}")));
    }
    let dim = env.dim();
    let region = BoxRegion::cube(dim, origin, radius);
    let mut times = vec![None; region.len()];
    let offsets = env.step_set().offsets();
    let mut boundary_contact = false;

    times[region.index(&origin).expect("origin in box")] = Some(0);
    let mut frontier = vec![origin];
    let mut t = 0u32;
    while !frontier.is_empty() {
        let candidates: Vec<Site> = frontier
            .par_iter()
            .flat_map_iter(|&x| {
                let open = env.site_law(x).send_probability();
                offsets
                    .iter()
                    .zip(open)
                    .filter(move |(_, &q)| q > delta)
                    .map(move |(y, _)| x + *y)
            })
            .collect();
        t += 1;
        let mut next = Vec::new();
        for z in candidates {
            if (z - origin).l1() > radius {
                boundary_contact = true;
                continue;
            }
            let i = region.index(&z).expect("ball inside box");
            if times[i].is_none() {
                times[i] = Some(t);
                next.push(z);
            }
        }
        frontier = next;
    }
    Ok(PassageTimeMap {
        delta,
        origin,
        radius,
        region,
        times,
        boundary_contact,
    })
}

/// `R(0), ..., R(n)`: sites reachable in exactly `k` δ-open steps.
pub fn reachable_layers(
    env: &EnvironmentField,
    delta: f64,
    n: usize,
    start: Site,
) -> Vec<BTreeSet<Site>> {
    let offsets = env.step_set().offsets();
    let mut layers = Vec::with_capacity(n + 1);
    let mut current: BTreeSet<Site> = BTreeSet::from([start]);
    layers.push(current.clone());
    for _ in 0..n {
        let mut next = BTreeSet::new();
        for &x in &current {
            let open = env.site_law(x).send_probability();
            for (y, &q) in offsets.iter().zip(open) {
                if q > delta {
                    next.insert(x + *y);
                }
            }
        }
        layers.push(next.clone());
        current = next;
    }
    layers
}

pub fn reachable_exactly(
    env: &EnvironmentField,
    delta: f64,
    n: usize,
    start: Site,
) -> BTreeSet<Site> {
    reachable_layers(env, delta, n, start).pop().unwrap_or_default()
}

/// Finite-`n` proxy for the norm `μ^δ(a)` along the ray `k0 a n`.
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub a: RationalPoint,
    pub k0: i64,
    /// `(n, T(0, k0 a n) / (k0 n))`; infinite when unreachable.
    pub samples: Vec<(usize, f64)>,
    pub value: f64,
}

pub fn norm_estimate(
    env: &EnvironmentField,
    delta: f64,
    a: &RationalPoint,
    n_max: usize,
) -> Result<NormEstimate> {
    if a.is_zero() {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    if a.dim() != env.dim() {
        return Err(Error::InvalidArgument("direction dimension mismatch".into()));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let k0 = a.lattice_multiplier();
    let far = a.scaled_site(k0 * n_max as i64)?;
    let l0 = env.step_set().l0_max();
    let radius = 2 * l0 * far.l1() + l0;
    let ptm = passage_times(env, delta, radius)?;
    let mut samples = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let target = a.scaled_site(k0 * n as i64)?;
        let value = match ptm.get(target) {
            Some(t) => t as f64 / (k0 * n as i64) as f64,
            None if ptm.boundary_contact() => {
                return Err(Error::RayEscaped {
                    target: target.display(env.dim()),
                    radius,
                })
            }
            None => f64::INFINITY,
        };
        samples.push((n, value));
    }
    let value = samples.last().map(|s| s.1).unwrap_or(f64::INFINITY);
    Ok(NormEstimate {
        a: a.clone(),
        k0,
        samples,
        value,
    })
}

/// `W(n) / n` and its convex hull.
#[derive(Clone, Debug)]
pub struct ShapeEstimate {
    pub delta: f64,
    pub n: usize,
    pub dim: usize,
    /// Sites of `W(n)` relative to the origin of the passage-time map.
    pub sites: Vec<Site>,
    /// Hull of the normalised sites; `None` in three dimensions.
    pub hull: Option<Vec<Point>>,
}

impl ShapeEstimate {
    pub fn normalized(&self) -> Vec<Point> {
        let scale = self.n.max(1) as f64;
        self.sites
            .iter()
            .map(|s| s.coords(self.dim).iter().map(|&c| c as f64 / scale).collect())
            .collect()
    }
}

pub fn shape_polytope(ptm: &PassageTimeMap, n: usize) -> Result<ShapeEstimate> {
    let dim = ptm.dim();
    if n as i64 > ptm.radius {
        return Err(Error::InvalidArgument(format!(
            "n = {n} exceeds the passage-time radius {}",
            ptm.radius
        )));
    }
    let mut sites: Vec<Site> = ptm
        .reached()
        .filter(|(_, t)| *t as usize <= n)
        .map(|(s, _)| s - ptm.origin)
        .collect();
    sites.sort();
    let hull = scaled_hull(&sites, dim, n.max(1) as f64);
    Ok(ShapeEstimate {
        delta: ptm.delta,
        n,
        dim,
        sites,
        hull,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::environment::{EnvironmentSpec, OffspringConfig, SiteLaw};
    use crate::lattice::StepSet;

    fn open_nn(d: usize) -> EnvironmentField {
        let s = Arc::new(StepSet::nearest_neighbor(d).unwrap());
        let all: Vec<(Site, u32)> = s.offsets().iter().map(|o| (*o, 1)).collect();
        let law = SiteLaw::point_mass(s.clone(), OffspringConfig::from_pairs(&s, &all).unwrap())
            .unwrap();
        EnvironmentField::new(EnvironmentSpec::homogeneous(law)).unwrap()
    }

    #[test]
    fn open_lattice_times_are_l1_norms() {
        let env = open_nn(2);
        let ptm = passage_times(&env, 0.5, 6).unwrap();
        for (x, t) in ptm.reached() {
            assert_eq!(t as i64, x.l1());
        }
        assert_eq!(ptm.reached().count(), 1 + 2 * 6 * 7);
        assert!(ptm.boundary_contact());
    }

    #[test]
    fn large_delta_closes_everything() {
        let env = open_nn(1);
        let ptm = passage_times(&env, 1.0, 5).unwrap();
        assert_eq!(ptm.get(Site::ORIGIN), Some(0));
        assert_eq!(ptm.get(Site::new(&[1])), None);
        assert!(!ptm.boundary_contact());
    }

    #[test]
    fn bad_radius() {
        let env = open_nn(1);
        assert!(passage_times(&env, 0.0, 0).is_err());
    }

    #[test]
    fn parity_of_exact_reach() {
        let env = open_nn(1);
        let r = reachable_exactly(&env, 0.0, 3, Site::ORIGIN);
        let got: Vec<i64> = r.iter().map(|s| s.0[0]).collect();
        assert_eq!(got, vec![-3, -1, 1, 3]);
        assert_eq!(reachable_exactly(&env, 0.0, 0, Site::new(&[2])), BTreeSet::from([Site::new(&[2])]));
    }

    #[test]
    fn norm_on_open_axis() {
        let env = open_nn(2);
        let e1 = RationalPoint::from_ints(&[1, 0], 1);
        let est = norm_estimate(&env, 0.0, &e1, 8).unwrap();
        assert_eq!(est.k0, 1);
        assert!(est.samples.iter().all(|(_, v)| *v == 1.0));
        let diag = RationalPoint::from_ints(&[1, 1], 2);
        let est = norm_estimate(&env, 0.0, &diag, 5).unwrap();
        assert_eq!(est.k0, 2);
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn shape_at_zero_is_origin() {
        let env = open_nn(2);
        let ptm = passage_times(&env, 0.0, 4).unwrap();
        let s = shape_polytope(&ptm, 0).unwrap();
        assert_eq!(s.sites, vec![Site::ORIGIN]);
        assert_eq!(s.normalized(), vec![vec![0.0, 0.0]]);
        assert!(shape_polytope(&ptm, 5).is_err());
    }
}
