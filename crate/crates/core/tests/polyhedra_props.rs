//! Property suite for the constraint kernel, checked against independent
//! oracles: Fourier–Motzkin with strict inequalities and 2-D vertex
//! enumeration.

mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specint::polyhedra::{
    binary_interpolant, convex_hull, entails, is_sat, project, sequence_interpolants, simplify,
    widen, LinConstraint, PathFormulas,
};

const VARS: [&str; 3] = ["X", "Y", "Z"];

fn seeded() -> impl Strategy<Value = ChaCha8Rng> {
    any::<u64>().prop_map(ChaCha8Rng::seed_from_u64)
}

fn satisfiable(rng: &mut ChaCha8Rng, vars: &[&str], max_atoms: usize) -> LinConstraint {
    loop {
        let c = random_constraint(rng, vars, max_atoms);
        if is_sat(&c) {
            return c;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sat_agrees_with_fourier_motzkin(mut rng in seeded()) {
        let c = random_constraint(&mut rng, &VARS, 6);
        prop_assert_eq!(is_sat(&c), fm_sat(&rows_of(&c)));
    }

    #[test]
    fn entails_agrees_with_atomwise_definition(mut rng in seeded()) {
        let a = random_constraint(&mut rng, &VARS, 4);
        let b = random_constraint(&mut rng, &VARS, 2);
        prop_assert_eq!(entails(&a, &b), fm_entails(&a, &b));
    }

    #[test]
    fn simplify_is_equivalent_and_idempotent(mut rng in seeded()) {
        let c = random_constraint(&mut rng, &VARS, 6);
        let s = simplify(&c);
        prop_assert!(fm_equivalent(&c, &s));
        prop_assert_eq!(simplify(&s), s.clone());
        // No atom is entailed by the others.
        for (i, a) in s.atoms().iter().enumerate() {
            let rest = LinConstraint::from_atoms(
                s.atoms().iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x.clone()),
            );
            prop_assert!(!fm_entails(&rest, &LinConstraint::from_atoms([a.clone()])));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn projection_is_exact_at_sampled_points(mut rng in seeded()) {
        let c = random_constraint(&mut rng, &VARS, 6);
        let keep: BTreeSet<String> =
            VARS.iter().filter(|_| rng.gen_bool(0.5)).map(|v| v.to_string()).collect();
        let p = project(&c, &keep);
        prop_assert!(p.vars().is_subset(&keep));
        prop_assert!(fm_entails(&c, &p));
        for _ in 0..100 {
            let pt = random_point(&mut rng, &keep);
            let extends = fm_sat(&rows_of(&c.and(&LinConstraint::from_point(&pt))));
            prop_assert_eq!(p.holds_at(&pt).unwrap_or(!p.is_false()), extends);
        }
    }

    #[test]
    fn hull_contains_both_operands(mut rng in seeded()) {
        let a = satisfiable(&mut rng, &VARS, 4);
        let b = satisfiable(&mut rng, &VARS, 4);
        let h = convex_hull(&a, &b).unwrap();
        prop_assert!(fm_entails(&a, &h));
        prop_assert!(fm_entails(&b, &h));
    }

    #[test]
    fn widening_is_sound_and_stabilizes(mut rng in seeded()) {
        let mut w = satisfiable(&mut rng, &VARS, 4);
        let budget = 2 * w.len();
        let mut changes = 0;
        for _ in 0..20 {
            let c = satisfiable(&mut rng, &VARS, 4);
            let h = convex_hull(&w, &c).unwrap();
            let next = widen(&w, &h).unwrap();
            prop_assert!(fm_entails(&w, &next));
            prop_assert!(fm_entails(&h, &next));
            if !fm_equivalent(&w, &next) {
                changes += 1;
            }
            w = next;
        }
        prop_assert!(changes <= budget, "{changes} changes from {budget} half-spaces");
    }

    #[test]
    fn sequence_interpolants_satisfy_the_contract(mut rng in seeded()) {
        let n = rng.gen_range(1..=6);
        let vars = ["X", "Y", "Z", "W"];
        let mut fs: Vec<LinConstraint> = Vec::new();
        loop {
            fs.clear();
            for _ in 0..n {
                let k = rng.gen_range(1..=3);
                let i = rng.gen_range(0..3);
                fs.push(random_constraint(&mut rng, &vars[i..(i + 2).min(4)], k));
            }
            if !is_sat(&LinConstraint::conjoin_all(&fs)) {
                break;
            }
        }
        let its = sequence_interpolants(&PathFormulas::new(fs.clone())).unwrap();
        prop_assert_eq!(its.len(), n + 1);
        prop_assert!(its[0].is_true());
        prop_assert!(!fm_sat(&rows_of(&its[n])));
        for i in 1..=n {
            prop_assert!(fm_entails(&its[i - 1].and(&fs[i - 1]), &its[i]));
            let pre: BTreeSet<String> = fs[..i].iter().flat_map(|f| f.vars()).collect();
            let post: BTreeSet<String> = fs[i..].iter().flat_map(|f| f.vars()).collect();
            let shared: BTreeSet<String> = pre.intersection(&post).cloned().collect();
            prop_assert!(its[i].vars().is_subset(&shared));
        }
    }
}

#[test]
fn interpolant_contract_on_200_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 200 {
        let a = random_constraint(&mut rng, &["X", "Y", "Z"], 3);
        let b = random_constraint(&mut rng, &["Y", "Z", "W"], 3);
        if fm_sat(&rows_of(&a.and(&b))) {
            continue;
        }
        let i = binary_interpolant(&a, &b).unwrap();
        assert!(fm_entails(&a, &i), "{a} does not entail {i}");
        assert!(!fm_sat(&rows_of(&i.and(&b))), "{i} and {b} are consistent");
        let shared: BTreeSet<String> = a.vars().intersection(&b.vars()).cloned().collect();
        assert!(
            i.vars().is_subset(&shared),
            "{i} leaves the shared variables"
        );
        done += 1;
    }
}

#[test]
fn hull_matches_vertex_enumeration_in_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..150 {
        let a = random_polygon(&mut rng);
        let b = random_polygon(&mut rng);
        let h = convex_hull(&a, &b).unwrap();
        if let Err(e) = hull_matches_vertex_oracle(&a, &b, &h) {
            panic!("{e}");
        }
    }
}
