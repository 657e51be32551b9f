mod common;

use brwre_core::environment::EnvironmentField;
use brwre_core::expectation::{solve, Orientation, Solver};
use brwre_core::shape::reachable_exactly;
use brwre_core::Site;
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `Σ_paths Π μ` over all step sequences of length `n` from `x` ending at `y`.
fn path_sum(env: &EnvironmentField, x: Site, y: Site, n: usize) -> f64 {
    if n == 0 {
        return if x == y { 1.0 } else { 0.0 };
    }
    let law = env.site_law(x);
    env.step_set()
        .offsets()
        .iter()
        .zip(law.mean_offspring())
        .map(|(o, &mu)| if mu == 0.0 { 0.0 } else { mu * path_sum(env, x + *o, y, n - 1) })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_brute_force_path_sums(seed: u64, n in 0usize..=6, x0 in -3i64..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 1, 3, 1.9);
        let start = Site::new(&[x0]);
        let layer = solve(&env, start, n).unwrap().pop().unwrap();
        for y in -7..=7 {
            let target = start + Site::new(&[y]);
            let exact = path_sum(&env, start, target, n);
            let got = layer.get(target).exp();
            if exact == 0.0 {
                prop_assert_eq!(got, 0.0);
            } else {
                prop_assert!((got - exact).abs() <= 1e-10 * exact, "{got} vs {exact}");
            }
        }
    }

    #[test]
    fn supermultiplicative(seed: u64, n1 in 0usize..=8, n2 in 0usize..=8, dim in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, dim, 3, 1.9);
        let x = random_site(&mut rng, dim, 3);
        let y = x + random_site(&mut rng, dim, 3);
        let z = y + random_site(&mut rng, dim, 3);
        let from_x = solve(&env, x, n1 + n2).unwrap();
        let from_y = solve(&env, y, n2).unwrap();
        let lhs = from_x[n1].get(y) + from_y[n2].get(z);
        prop_assert!(lhs <= from_x[n1 + n2].get(z) + 1e-9);
    }

    #[test]
    fn support_is_exact_reachability(seed: u64, n in 0usize..=10, dim in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, dim, 2, 1.5);
        let layer = solve(&env, Site::ORIGIN, n).unwrap().pop().unwrap();
        let support: std::collections::BTreeSet<Site> = layer.support().collect();
        prop_assert_eq!(support, reachable_exactly(&env, 0.0, n, Site::ORIGIN));
    }
}

#[test]
fn bit_identical_across_worker_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let env = random_env(&mut rng, 2, 4, 1.9);
    let one = Solver::new(&env).with_workers(1).unwrap();
    let many = Solver::new(&env).with_workers(4).unwrap();
    for orientation in [Orientation::Forward, Orientation::Adjoint] {
        let a = one.solve_with(Site::new(&[1, -2]), 40, orientation, |_| Ok(())).unwrap();
        let b = many.solve_with(Site::new(&[1, -2]), 40, orientation, |_| Ok(())).unwrap();
        let bits = |f: &brwre_core::expectation::LogMassField| -> Vec<u64> {
            f.values().iter().map(|v| v.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn three_dimensional_layers_total() {
    let s = nn(3);
    let env = homogeneous(point_mass(&s, &[(&[1, 0, 0], 1), (&[0, 0, -1], 2)]));
    let layers = solve(&env, Site::ORIGIN, 12).unwrap();
    for (n, layer) in layers.iter().enumerate() {
        let total = brwre_core::expectation::expected_total(layer);
        assert!((total - n as f64 * 3f64.ln()).abs() < 1e-9);
    }
}
