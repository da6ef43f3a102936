use oneshot_qit::entropy::{
    check_mixture_identity, dh_eps, dmax, facts, hmin, relative_entropy, transpose_trick_residual, transpose_unitary,
};
use oneshot_qit::linalg::{random_density, random_unitary, tensor, DensityOperator, PureState, RegisterSystem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn simplex(rng: &mut ChaCha20Rng, d: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(floor..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// min sum q_i t_i subject to sum p_i t_i >= 1 - eps, 0 <= t <= 1, over every
/// vertex: a set of ones plus at most one fractional coordinate.
fn lp_vertex_optimum(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let d = p.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << d) {
        let ones: Vec<usize> = (0..d).filter(|&i| mask >> i & 1 == 1).collect();
        let mass: f64 = ones.iter().map(|&i| p[i]).sum();
        let cost: f64 = ones.iter().map(|&i| q[i]).sum();
        if mass >= 1.0 - eps - 1e-15 {
            best = best.min(cost);
        }
        for f in (0..d).filter(|&i| mask >> i & 1 == 0 && p[i] > 0.0) {
            let t = (1.0 - eps - mass) / p[f];
            if (0.0..=1.0).contains(&t) {
                best = best.min(cost + t * q[f]);
            }
        }
    }
    best
}

fn diag_state(d: usize, p: &[f64]) -> DensityOperator {
    DensityOperator::from_diagonal(RegisterSystem::single("A", d).unwrap(), p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn dh_matches_vertex_enumeration(seed in any::<u64>(), d in 2usize..=4, eps in 0.01f64..0.5) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (p, q) = (simplex(&mut rng, d, 0.0), simplex(&mut rng, d, 0.05));
        let got = dh_eps(&diag_state(d, &p), &diag_state(d, &q), eps).unwrap().as_f64();
        let want = -lp_vertex_optimum(&p, &q, eps).log2();
        prop_assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
    }

    #[test]
    fn hmin_of_product_is_min_entropy(seed in any::<u64>()) {
        let a = random_density(seed, RegisterSystem::single("A", 2).unwrap(), 2).unwrap();
        let b = random_density(seed ^ 1, RegisterSystem::single("B", 2).unwrap(), 2).unwrap();
        let got = hmin(&tensor(&a, &b).unwrap(), &["A"], &["B"]).unwrap().as_f64();
        let top = a.eigenvalues().into_iter().fold(0.0, f64::max);
        prop_assert!((got + top.log2()).abs() <= 1e-5, "{got}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fidelity_and_measurement_facts(seed in any::<u64>(), d in 2usize..=4) {
        let sys = RegisterSystem::single("A", d).unwrap();
        let rho = random_density(seed, sys.clone(), d).unwrap();
        let sigma = random_density(seed.wrapping_add(1), sys, d).unwrap();
        let a = facts::random_contraction(seed, d);
        prop_assert!(facts::pinsker_slack(&rho, &sigma).unwrap() >= -1e-9);
        prop_assert!(facts::gentle_measurement_slack(&rho, &a).unwrap() >= -1e-9);
        prop_assert!(facts::measurement_continuity_slack(&a, &rho, &sigma).unwrap() >= -1e-9);
        let (gap, slack) = facts::canonical_fidelity(&rho, &sigma).unwrap();
        prop_assert!(gap <= 1e-9 && slack >= -1e-9);
    }

    #[test]
    fn mixture_identity_holds(seed in any::<u64>(), k in 2usize..=4) {
        let sys = RegisterSystem::single("A", 3).unwrap();
        let states: Vec<_> = (0..k).map(|i| random_density(seed.wrapping_add(i as u64), sys.clone(), 3).unwrap()).collect();
        let theta = random_density(seed ^ 0xff, sys, 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let w = simplex(&mut rng, k, 0.05);
        prop_assert!(check_mixture_identity(&states, &w, &theta).unwrap() <= 1e-7);
    }

    #[test]
    fn transpose_trick(seed in any::<u64>(), d in 2usize..=5) {
        let u = random_unitary(seed, d);
        let ut = transpose_unitary(&u).unwrap();
        prop_assert!(transpose_trick_residual(&u, &ut) <= 1e-9);
    }

    #[test]
    fn dmax_dominates_relative_entropy(seed in any::<u64>()) {
        let sys = RegisterSystem::single("A", 3).unwrap();
        let rho = random_density(seed, sys.clone(), 2).unwrap();
        let sigma = random_density(seed ^ 7, sys, 3).unwrap();
        let d = relative_entropy(&rho, &sigma).unwrap().as_f64();
        prop_assert!(dmax(&rho, &sigma).unwrap().as_f64() >= d - 1e-9);
    }
}

#[test]
fn hmin_of_maximally_entangled_pair() {
    for d in 2..=3 {
        let phi = PureState::maximally_entangled("A", "B", d).unwrap().density();
        let h = hmin(&phi, &["A"], &["B"]).unwrap().as_f64();
        assert!((h + (d as f64).log2()).abs() <= 1e-5, "d = {d}: {h}");
    }
}
