use oneshot_qit::convex_split::{
    classical_marginal_check, convex_split_1design, convex_split_classical, one_design_residual, PrimeRegister,
};
use oneshot_qit::field::pairwise_family;
use oneshot_qit::linalg::{random_density, RegisterSystem};
use proptest::prelude::*;

fn state(seed: u64, r: usize, c: usize) -> oneshot_qit::linalg::DensityOperator {
    random_density(seed, RegisterSystem::new(&[("R", r), ("C", c)]).unwrap(), r * c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn one_design_decouples(seed in any::<u64>(), d in 2usize..=5) {
        prop_assert!(one_design_residual(&state(seed, 2, d), "C").unwrap() <= 1e-10);
    }

    #[test]
    fn pauli_split_is_bounded_and_monotone(seed in any::<u64>()) {
        let psi = state(seed, 2, 2);
        let family = pairwise_family(4).unwrap();
        let mut last = f64::INFINITY;
        for n in [1, 2, 4] {
            let rep = convex_split_1design(&psi, "C", n, &family, seed).unwrap();
            prop_assert!(rep.holds(1e-7), "{rep:?}");
            prop_assert!(rep.achieved_rel_entropy <= last + 1e-9);
            last = rep.achieved_rel_entropy;
        }
    }

    #[test]
    fn classical_split_is_bounded_and_monotone(seed in any::<u64>()) {
        let psi = state(seed, 2, 2);
        let reg = PrimeRegister::new(2).unwrap();
        let mut last = f64::INFINITY;
        for s in [vec![0], vec![0, 1], vec![0, 1, 2, 3]] {
            let rep = convex_split_classical(&psi, "C", &reg, &s).unwrap();
            prop_assert!(rep.holds(1e-7), "{rep:?}");
            prop_assert!(rep.achieved_rel_entropy <= last + 1e-9);
            last = rep.achieved_rel_entropy;
        }
        for m in 1..reg.prime() {
            prop_assert!(classical_marginal_check(&psi, "C", &reg, m).unwrap() <= 1e-10);
        }
    }
}
