use oneshot_qit::coding::{ea_channel_code_unchecked, hayashi_nagaoka_povm, hn_slack, CodeParams, QuantumChannel};
use oneshot_qit::entropy::facts::random_contraction;
use oneshot_qit::linalg::{CMat, PureState};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn hayashi_nagaoka_inequality(seed in any::<u64>(), k in 1usize..=5, d in 2usize..=4, c in 0.1f64..4.0) {
        let ops: Vec<CMat> = (0..k as u64).map(|i| random_contraction(seed.wrapping_add(i), d)).collect();
        let povm = hayashi_nagaoka_povm(&ops).unwrap();
        prop_assert!(povm.completeness_residual() <= 1e-8);
        prop_assert!(povm.min_eigenvalue() >= -1e-9);
        for i in 0..k {
            prop_assert!(hn_slack(&ops, &povm, i, c) >= -1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn coding_error_grows_with_rate(seed in any::<u64>(), depolarize in any::<bool>()) {
        let psi = PureState::maximally_entangled("A", "R", 2).unwrap();
        let ch = if depolarize { QuantumChannel::depolarizing(2, 0.1) } else { QuantumChannel::identity(2) }.unwrap();
        let mut last = 0.0;
        for rate in 0..=3 {
            let p = CodeParams { rate, eps: 0.05, gamma: 0.5, delta_prime: 0.5, a: 2, n: 8, d_size: 18, seed };
            let rep = ea_channel_code_unchecked(&ch, &psi, "A", &p).unwrap();
            prop_assert!(rep.general_holds(1e-9), "{rep:?}");
            prop_assert!(rep.empirical_max_error >= last - 1e-9, "R = {rate}: {} < {last}", rep.empirical_max_error);
            last = rep.empirical_max_error;
        }
    }
}
