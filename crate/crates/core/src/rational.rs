//! Rational directions `a ∈ Q^d` and the integer multipliers that put them
//! back on the lattice.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice::{check_dimension, Site};

pub type Rational = Ratio<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint(Vec<Rational>);

impl RationalPoint {
    pub fn new(coords: Vec<Rational>) -> Result<RationalPoint> {
        check_dimension(coords.len())?;
        Ok(RationalPoint(coords))
    }

    pub fn zero(dim: usize) -> RationalPoint {
        RationalPoint(vec![Rational::zero(); dim])
    }

    pub fn from_ints(num: &[i64], den: i64) -> RationalPoint {
        RationalPoint(num.iter().map(|&n| Rational::new(n, den)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn l1(&self) -> f64 {
        self.to_f64().iter().map(|c| c.abs()).sum()
    }

    /// Smallest positive integer `k` with `k a ∈ Z^d`.
    pub fn lattice_multiplier(&self) -> i64 {
        self.0.iter().fold(1, |acc, r| acc.lcm(r.denom()))
    }

    /// Smallest positive even integer `k` with `k a ∈ 2Z^d`.
    pub fn even_lattice_multiplier(&self) -> i64 {
        self.0.iter().fold(2, |acc, r| {
            let q = *r.denom();
            let need = if r.numer().is_odd() { 2 * q } else { q };
            acc.lcm(&need)
        })
    }

    /// `k a`, which must be integral.
    pub fn scaled_site(&self, k: i64) -> Result<Site> {
        let mut c = Vec::with_capacity(self.dim());
        for r in &self.0 {
            let v = r * Rational::from_integer(k);
            if !v.is_integer() {
                return Err(Error::InvalidArgument(format!("{k}·{self} is not integral")));
            }
            c.push(v.to_integer());
        }
        Ok(Site::new(&c))
    }

    pub fn neg(&self) -> RationalPoint {
        RationalPoint(self.0.iter().map(|r| -r).collect())
    }

    pub fn midpoint(&self, other: &RationalPoint) -> RationalPoint {
        let half = Rational::new(1, 2);
        RationalPoint(self.0.iter().zip(&other.0).map(|(a, b)| (a + b) * half).collect())
    }

    pub fn abs_max(&self) -> Rational {
        self.0.iter().map(|r| r.abs()).max().unwrap_or_else(Rational::zero)
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Parses one coordinate given as `p/q`, an integer, or a finite decimal
/// such as `-0.25` (converted exactly).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse {s:?} as a rational"));
    if s.contains('/') {
        return Rational::from_str(s).map_err(|_| bad());
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if frac_part.len() > 15 {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: i64 = digits.parse().map_err(|_| bad())?;
    let den = 10i64.pow(frac_part.len() as u32);
    let r = Rational::new(num, den);
    Ok(if neg { -r } else { r })
}

impl FromStr for RationalPoint {
    type Err = Error;

    /// Comma-separated coordinates, e.g. `1/2,-0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = inner
            .split(',')
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        RationalPoint::new(coords)
    }
}
