use oneshot_qit::circuit::{metrics, synth_decoupler, verify_decoupler, ReversibleCircuit};
use proptest::prelude::*;

#[test]
fn decoupler_matches_permutations_exhaustively() {
    for (c, g) in [(2usize, 5u64), (2, 7), (3, 11)] {
        let d = synth_decoupler(c, g, g).unwrap();
        let check = verify_decoupler(&d).unwrap();
        assert_eq!(check.inputs, (g * g * g) as usize);
        assert!(check.passed(), "(|C|, |G|) = ({c}, {g}): {check:?}");
    }
}

#[test]
fn decoupler_size_stays_in_polylog_band() {
    let primes = [5u64, 7, 11, 13, 17, 31];
    let scaled = |g: u64, size: usize| {
        let lg = (g as f64).log2();
        size as f64 / (lg * lg * lg.log2())
    };
    let sizes: Vec<usize> = primes.iter().map(|&g| metrics(&synth_decoupler(2, g, g).unwrap().circuit).size).collect();
    let c = scaled(primes[0], sizes[0]);
    for (&g, &s) in primes.iter().zip(&sizes) {
        assert!(scaled(g, s) <= 2.0 * c, "|G| = {g}: size {s}");
        let m = metrics(&synth_decoupler(2, g, g).unwrap().circuit);
        assert!(m.depth <= m.size);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_inputs_round_trip_through_inverse(idx in 0usize..6, word in any::<u128>()) {
        let g = [5u64, 7, 11, 13, 17, 31][idx];
        let d = synth_decoupler(2, g, g).unwrap();
        let mask = if d.circuit.wires() == 128 { u128::MAX } else { (1u128 << d.circuit.wires()) - 1 };
        let input = word & mask;
        prop_assert_eq!(d.circuit.inverse().run_word(d.circuit.run_word(input)), input);
    }

    #[test]
    fn text_format_round_trips(idx in 0usize..3, l in 1u64..6) {
        let g = [5u64, 7, 11][idx];
        let d = synth_decoupler(2, g, l.min(g)).unwrap();
        let text = d.circuit.to_text();
        let back: ReversibleCircuit = text.parse().unwrap();
        prop_assert_eq!(back.to_text(), text);
    }
}
