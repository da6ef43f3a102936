use oneshot_qit::flatten::{
    check_embezzle_upper, check_unembezzle, purified_embezzle_fidelity, round_spectrum, w_b_permutation, Rounding,
};
use oneshot_qit::linalg::{random_density, RegisterSystem};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w_b_is_a_bijection(b in 0usize..6, extra in 0usize..4, d_size in 1usize..40) {
        let e_size = b + extra;
        prop_assume!(e_size > 0);
        let mut perm = w_b_permutation(b, d_size, e_size).unwrap();
        perm.sort_unstable();
        prop_assert_eq!(perm, (0..d_size * e_size).collect::<Vec<_>>());
    }

    #[test]
    fn purified_fidelity_grows_with_n(a in 1usize..8, b in 1usize..4, n in 8usize..200) {
        prop_assume!(a >= b);
        prop_assert!(purified_embezzle_fidelity(a, b, n + 1) >= purified_embezzle_fidelity(a, b, n) - 1e-12);
    }

    #[test]
    fn embezzle_ratios_hold(b in 1usize..4, a_mult in 1usize..4, n in 8usize..64) {
        let a = b * a_mult;
        prop_assume!(n >= a);
        prop_assert!(check_embezzle_upper(a, b, n).unwrap().holds);
        prop_assert!(check_unembezzle(a, b, n, (n + 1) * b).unwrap().holds);
    }

    #[test]
    fn rounding_preserves_grid(seed in any::<u64>(), up in any::<bool>()) {
        let omega = random_density(seed, RegisterSystem::single("C", 2).unwrap(), 2).unwrap();
        let dir = if up { Rounding::Up } else { Rounding::Down };
        let spec = round_spectrum(&omega, 0.25, dir).unwrap();
        prop_assert_eq!(spec.blocks().iter().sum::<usize>(), spec.grid());
    }
}
