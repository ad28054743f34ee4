mod common;

use common::random_chc;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specint::chc::{bounded_oracle, emit_chc, parse_chc, replay, OracleOutcome};
use specint::reversal::{map_reversed_derivation, reverse, REVERSED_SUFFIX};

#[test]
fn schema_program() {
    let p = parse_chc(
        "unsafe :- A >= 1, r1(A).\n\
         r1(U) :- V = U + 1, r1(V).\n\
         r1(U) :- U =< 0.\n",
    )
    .unwrap();
    assert_eq!(
        emit_chc(&reverse(&p).unwrap()),
        "r1_rev(A) :- A >= 1.\n\
         r1_rev(V) :- U-V = -1, r1_rev(U).\n\
         unsafe :- U =< 0, r1_rev(U).\n"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn reversal_is_an_involution(seed in any::<u64>()) {
        let p = parse_chc(&random_chc(&mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let r = reverse(&p).unwrap();
        prop_assert_eq!(r.len(), p.len());
        let twice = emit_chc(&reverse(&r).unwrap()).replace(&REVERSED_SUFFIX.repeat(2), "");
        prop_assert_eq!(twice, emit_chc(&p));
    }

    #[test]
    fn reversal_agrees_with_the_oracle(seed in any::<u64>()) {
        let p = parse_chc(&random_chc(&mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let r = reverse(&p).unwrap();
        for d in 1..=10 {
            let (a, b) = (bounded_oracle(&p, d), bounded_oracle(&r, d));
            // Linear derivations map one to one, so answers appear at the
            // same depth in both programs.
            prop_assert_eq!(a.is_found(), b.is_found(), "depth {}", d);
            let contradicts = |x: &OracleOutcome, y: &OracleOutcome| {
                x.is_found() && matches!(y, OracleOutcome::ExhaustedAll)
            };
            prop_assert!(!contradicts(&a, &b) && !contradicts(&b, &a));
            if let OracleOutcome::FoundAnswer(t) = b {
                prop_assert!(replay(&p, &map_reversed_derivation(&t.clause_ids())).is_some());
            }
        }
    }
}
