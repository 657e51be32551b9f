//! Lattice points, step sets and axis-aligned boxes.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 3;

/// A point of `Z^d`, `d <= 3`. Unused trailing coordinates are zero, so the
/// same value also serves as an offset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(pub [i64; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    /// Builds a site from up to three coordinates.
    pub fn new(coords: &[i64]) -> Site {
        assert!(coords.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site(c)
    }

    pub fn from_vec(coords: &[i64], dim: usize) -> Result<Site> {
        if coords.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "expected {dim} coordinates, got {}",
                coords.len()
            )));
        }
        check_dimension(dim)?;
        Ok(Site::new(coords))
    }

    /// `sign * e_axis`.
    pub fn unit(axis: usize, sign: i64) -> Site {
        let mut c = [0; MAX_DIM];
        c[axis] = sign;
        Site(c)
    }

    pub fn coords(&self, dim: usize) -> &[i64] {
        &self.0[..dim]
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.l1() == 1
    }

    pub fn to_f64(&self, dim: usize) -> Vec<f64> {
        self.coords(dim).iter().map(|&c| c as f64).collect()
    }

    /// Formats as `(x,y,...)` with `dim` entries, the form used as JSON keys.
    pub fn display(&self, dim: usize) -> String {
        let parts: Vec<String> = self.coords(dim).iter().map(|c| c.to_string()).collect();
        format!("({})", parts.join(","))
    }

    /// Parses `(1,0)`, `1,0` or `[1, 0]`.
    pub fn parse(s: &str, dim: usize) -> Result<Site> {
        let inner = s
            .trim()
            .trim_start_matches(['(', '['])
            .trim_end_matches([')', ']']);
        let coords = inner
            .split(',')
            .map(|p| p.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad site {s:?}: {e}")))?;
        Site::from_vec(&coords, dim)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

impl Add for Site {
    type Output = Site;
    fn add(self, rhs: Site) -> Site {
        Site([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Site {
    type Output = Site;
    fn sub(self, rhs: Site) -> Site {
        Site([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<i64> for Site {
    type Output = Site;
    fn mul(self, k: i64) -> Site {
        Site([self.0[0] * k, self.0[1] * k, self.0[2] * k])
    }
}

pub fn check_dimension(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// The finite set of displacements a child may take relative to its parent.
///
/// Offsets are kept sorted; every per-offset vector in the crate (mean
/// offspring, kernels, counts) is aligned with this order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepSet {
    dim: usize,
    offsets: Vec<Site>,
    l0_max: i64,
    /// Index of `+e_1, -e_1, +e_2, -e_2, ...` inside `offsets`.
    unit_index: Vec<usize>,
}

impl StepSet {
    pub fn new(dim: usize, mut offsets: Vec<Site>) -> Result<StepSet> {
        check_dimension(dim)?;
        for o in &offsets {
            if o.0[dim..].iter().any(|&c| c != 0) {
                return Err(Error::InvalidSpec(format!(
                    "offset {o} has coordinates beyond dimension {dim}"
                )));
            }
        }
        offsets.sort();
        let before = offsets.len();
        offsets.dedup();
        if offsets.len() != before {
            return Err(Error::InvalidSpec("step set offsets must be distinct".into()));
        }
        let mut unit_index = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            for sign in [1, -1] {
                let e = Site::unit(axis, sign);
                let idx = offsets.binary_search(&e).map_err(|_| {
                    Error::InvalidSpec(format!("step set must contain {}", e.display(dim)))
                })?;
                unit_index.push(idx);
            }
        }
        let l0_max = offsets.iter().map(Site::l1).max().unwrap_or(0);
        Ok(StepSet {
            dim,
            offsets,
            l0_max,
            unit_index,
        })
    }

    /// `{±e_i}`.
    pub fn nearest_neighbor(dim: usize) -> Result<StepSet> {
        check_dimension(dim)?;
        let offsets = (0..dim)
            .flat_map(|axis| [Site::unit(axis, 1), Site::unit(axis, -1)])
            .collect();
        StepSet::new(dim, offsets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offsets(&self) -> &[Site] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// `L_0`, the largest l1-norm of an offset.
    pub fn l0_max(&self) -> i64 {
        self.l0_max
    }

    pub fn index_of(&self, offset: &Site) -> Option<usize> {
        self.offsets.binary_search(offset).ok()
    }

    /// Offset indices of the unit steps in the fixed order `+e_1, -e_1, +e_2, ...`.
    pub fn unit_indices(&self) -> &[usize] {
        &self.unit_index
    }

    /// Largest absolute value of each coordinate over the offsets.
    pub fn axis_reach(&self) -> [i64; MAX_DIM] {
        let mut r = [0; MAX_DIM];
        for o in &self.offsets {
            for (ri, c) in r.iter_mut().zip(o.0) {
                *ri = (*ri).max(c.abs());
            }
        }
        r
    }
}

/// Axis-aligned integer box `lo <= x <= hi` stored in row-major order (last
/// coordinate fastest).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxRegion {
    dim: usize,
    lo: Site,
    hi: Site,
}

impl BoxRegion {
    pub fn new(dim: usize, lo: Site, hi: Site) -> Result<BoxRegion> {
        check_dimension(dim)?;
        for i in 0..dim {
            if lo.0[i] > hi.0[i] {
                return Err(Error::InvalidArgument(format!("empty box {lo}..{hi}")));
            }
        }
        Ok(BoxRegion { dim, lo, hi })
    }

    /// Cube `center ± radius` in every used coordinate.
    pub fn cube(dim: usize, center: Site, radius: i64) -> BoxRegion {
        Self::with_reach(dim, center, [radius; MAX_DIM])
    }

    pub fn with_reach(dim: usize, center: Site, reach: [i64; MAX_DIM]) -> BoxRegion {
        let mut lo = center;
        let mut hi = center;
        for (i, r) in reach.iter().enumerate().take(dim) {
            lo.0[i] -= r;
            hi.0[i] += r;
        }
        BoxRegion { dim, lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> Site {
        self.lo
    }

    pub fn hi(&self) -> Site {
        self.hi
    }

    fn extent(&self, i: usize) -> usize {
        (self.hi.0[i] - self.lo.0[i] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dim).map(|i| self.extent(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &Site) -> bool {
        (0..self.dim).all(|i| x.0[i] >= self.lo.0[i] && x.0[i] <= self.hi.0[i])
    }

    pub fn index(&self, x: &Site) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx = 0usize;
        for i in 0..self.dim {
            idx = idx * self.extent(i) + (x.0[i] - self.lo.0[i]) as usize;
        }
        Some(idx)
    }

    pub fn site_at(&self, mut idx: usize) -> Site {
        let mut c = [0i64; MAX_DIM];
        for i in (0..self.dim).rev() {
            let e = self.extent(i);
            c[i] = self.lo.0[i] + (idx % e) as i64;
            idx /= e;
        }
        Site(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }
}
