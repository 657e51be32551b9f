#![allow(dead_code)]

use std::sync::Arc;

use brwre_core::environment::{
    Dependence, EnvironmentField, EnvironmentSpec, OffspringConfig, SiteLaw,
};
use brwre_core::{Site, StepSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn nn(dim: usize) -> Arc<StepSet> {
    Arc::new(StepSet::nearest_neighbor(dim).unwrap())
}

pub fn homogeneous(law: SiteLaw) -> EnvironmentField {
    EnvironmentField::new(EnvironmentSpec::homogeneous(law)).unwrap()
}

pub fn point_mass(s: &Arc<StepSet>, pairs: &[(&[i64], u32)]) -> SiteLaw {
    let pairs: Vec<(Site, u32)> = pairs.iter().map(|(o, c)| (Site::new(o), *c)).collect();
    SiteLaw::point_mass(s.clone(), OffspringConfig::from_pairs(s, &pairs).unwrap()).unwrap()
}

/// One child w.p. `2 - r`, two w.p. `r - 1`, each jumping by `p`.
pub fn two_stage(s: &Arc<StepSet>, r: f64, p: &[f64]) -> SiteLaw {
    assert!((1.0..=2.0).contains(&r));
    SiteLaw::multinomial_mixture(s.clone(), &[(1, 2.0 - r), (2, r - 1.0)], p).unwrap()
}

/// d = 1 two-stage law with mean offspring `mu_plus` at +1 and `mu_minus` at -1.
pub fn drift_law_1d(mu_plus: f64, mu_minus: f64) -> SiteLaw {
    let s = nn(1);
    let r = mu_plus + mu_minus;
    let plus = s.index_of(&Site::new(&[1])).unwrap();
    let mut p = vec![0.0; 2];
    p[plus] = mu_plus / r;
    p[1 - plus] = mu_minus / r;
    two_stage(&s, r, &p)
}

/// A jump distribution with every entry at least `floor`.
pub fn random_jumps(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter()
        .map(|x| floor + (1.0 - k as f64 * floor) * x / sum)
        .collect()
}

/// Random law: a two-stage law mixed with a random point mass, so that the
/// mean need not factorise through the jump distribution.
pub fn random_law(rng: &mut ChaCha8Rng, s: &Arc<StepSet>, r_max: f64) -> SiteLaw {
    let r = rng.random_range(1.0..r_max);
    let p = random_jumps(rng, s.len(), 0.05);
    let base = two_stage(s, r.min(2.0), &p);
    let mut counts = vec![0u32; s.len()];
    counts[rng.random_range(0..s.len())] = 1;
    let spike = SiteLaw::point_mass(s.clone(), OffspringConfig::new(counts).unwrap()).unwrap();
    let w = rng.random_range(0.0..0.3);
    SiteLaw::mixture(&[(1.0 - w, &base), (w, &spike)]).unwrap()
}

pub fn random_env(rng: &mut ChaCha8Rng, dim: usize, laws: usize, r_max: f64) -> EnvironmentField {
    let s = nn(dim);
    let laws: Vec<SiteLaw> = (0..laws).map(|_| random_law(rng, &s, r_max)).collect();
    let raw: Vec<f64> = laws.iter().map(|_| rng.random_range(0.2..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / sum).collect();
    let spec = EnvironmentSpec::new(s, laws, weights, Dependence::Iid, rng.random()).unwrap();
    EnvironmentField::new(spec).unwrap()
}

pub fn random_site(rng: &mut ChaCha8Rng, dim: usize, r: i64) -> Site {
    let c: Vec<i64> = (0..dim).map(|_| rng.random_range(-r..=r)).collect();
    Site::new(&c)
}

/// Two-sample chi-square statistic and degrees of freedom over the
/// categories observed in either sample.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> (f64, usize) {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let ka = (nb as f64 / na as f64).sqrt();
    let kb = (na as f64 / nb as f64).sqrt();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        cells += 1;
        let d = ka * x as f64 - kb * y as f64;
        stat += d * d / (x + y) as f64;
    }
    (stat, cells.max(1) - 1)
}
