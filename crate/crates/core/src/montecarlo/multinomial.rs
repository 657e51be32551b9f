//! Aggregated multinomial sampling of atom choices for big particle counts.
//!
//! Counts are split over atoms by successive conditional binomials. A single
//! binomial is drawn exactly when the count fits in `u64`. Beyond that the
//! draw falls back to a Poisson (tiny variance) or a normal approximation
//! (`N > 1e9` and `Np(1-p) > 1e6`); each approximate draw is counted and its
//! Berry-Esseen bound tracked.

use num_bigint::BigUint;
use num_traits::{Float, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};

/// Threshold on `N` above which the normal fast path may be used.
pub const NORMAL_MIN_COUNT: f64 = 1e9;
/// Threshold on `Np(1-p)` above which the normal fast path may be used.
pub const NORMAL_MIN_VARIANCE: f64 = 1e6;
const BERRY_ESSEEN_C: f64 = 0.4748;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SamplerStats {
    pub exact_draws: u64,
    pub normal_draws: u64,
    pub poisson_draws: u64,
    /// Largest Berry-Esseen bound `C (p² + q²) / sqrt(npq)` over normal draws.
    pub max_berry_esseen: f64,
}

impl SamplerStats {
    pub fn merge(&mut self, other: &SamplerStats) {
        self.exact_draws += other.exact_draws;
        self.normal_draws += other.normal_draws;
        self.poisson_draws += other.poisson_draws;
        self.max_berry_esseen = self.max_berry_esseen.max(other.max_berry_esseen);
    }
}

/// Natural log of a big integer (`-inf` for zero).
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return n.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().expect("64-bit prefix");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `floor(n * f)` for finite `f >= 0`.
pub fn mul_f64(n: &BigUint, f: f64) -> BigUint {
    if f <= 0.0 || n.is_zero() {
        return BigUint::zero();
    }
    let (mantissa, exp, _) = f.integer_decode();
    let prod = n * BigUint::from(mantissa);
    if exp >= 0 {
        prod << (exp as u32)
    } else {
        prod >> ((-exp) as u32)
    }
}

fn binomial<R: Rng + ?Sized>(n: &BigUint, p: f64, rng: &mut R, stats: &mut SamplerStats) -> BigUint {
    if n.is_zero() || p <= 0.0 {
        return BigUint::zero();
    }
    if p >= 1.0 {
        return n.clone();
    }
    let q = 1.0 - p;
    let ln_n = ln_biguint(n);
    let ln_var = ln_n + p.ln() + q.ln();
    if ln_n > NORMAL_MIN_COUNT.ln() && ln_var > NORMAL_MIN_VARIANCE.ln() {
        stats.normal_draws += 1;
        let be = BERRY_ESSEEN_C * (p * p + q * q) * (-0.5 * ln_var).exp();
        stats.max_berry_esseen = stats.max_berry_esseen.max(be);
        let mean = mul_f64(n, p);
        let sd = mul_f64(&n.sqrt(), (p * q).sqrt());
        let z: f64 = StandardNormal.sample(rng);
        let dev = mul_f64(&sd, z.abs());
        return if z >= 0.0 {
            (mean + dev).min(n.clone())
        } else if dev >= mean {
            BigUint::zero()
        } else {
            mean - dev
        };
    }
    if let Some(small) = n.to_u64() {
        stats.exact_draws += 1;
        let b = Binomial::new(small, p).expect("valid binomial parameters");
        return BigUint::from(b.sample(rng));
    }
    // N beyond u64 with N p q <= 1e6: one of p, q is tiny.
    stats.poisson_draws += 1;
    let (rare, flip) = if p <= q { (p, false) } else { (q, true) };
    let lambda = (ln_n + rare.ln()).exp();
    let k = if lambda > 0.0 {
        Poisson::new(lambda).expect("valid Poisson mean").sample(rng) as u64
    } else {
        0
    };
    let k = BigUint::from(k).min(n.clone());
    if flip {
        n - k
    } else {
        k
    }
}

/// Splits `n` over categories with probabilities `probs` (summing to 1) by
/// conditional binomials in the given order.
pub fn multinomial<R: Rng + ?Sized>(
    n: &BigUint,
    probs: &[f64],
    rng: &mut R,
    stats: &mut SamplerStats,
) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); probs.len()];
    if probs.len() == 1 {
        out[0] = n.clone();
        return out;
    }
    let mut remaining = n.clone();
    let mut mass_left: f64 = probs.iter().sum();
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (i, &p) in probs.iter().enumerate() {
        if remaining.is_zero() {
            break;
        }
        if i == last {
            out[i] = std::mem::take(&mut remaining);
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let cond = (p / mass_left).min(1.0);
        let k = binomial(&remaining, cond, rng, stats);
        remaining -= &k;
        out[i] = k;
        mass_left -= p;
    }
    out
}
