//! Randomized invariants across modules.

use std::collections::BTreeMap;

use proptest::prelude::*;

use crate::chase;
use crate::model::{Atom, Multiplicity, MultisetInstance, Term};
use crate::mra::{self, MraExpr};
use crate::multiplicity::{canonicalize, Engine, PairSR};
use crate::parser::{parse_edb, parse_program};
use crate::transform;
use crate::trees::{self, TreeOptions};

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![Just(Term::sym("a")), Just(Term::sym("b")), (1u32..=3).prop_map(Term::Null)]
}

fn pair() -> impl Strategy<Value = PairSR> {
    let atom = (prop::sample::select(vec!["r", "s"]), prop::collection::vec(term(), 2)).prop_map(|(p, args)| Atom::new(p, args));
    (prop::collection::vec(atom, 1..4), any::<u8>()).prop_map(|(mut atoms, mask)| {
        atoms.sort();
        atoms.dedup();
        let mut creators = BTreeMap::new();
        for a in &atoms {
            for z in a.nulls() {
                creators.entry(z).or_insert_with(|| (mask >> (z % 8) & 1 == 1).then(|| a.clone()));
            }
        }
        PairSR { atoms, creators }
    })
}

fn bag() -> impl Strategy<Value = MultisetInstance> {
    let row = (prop::sample::select(vec!["e", "f"]), 1i64..=3, 1i64..=3, 1u64..=3);
    prop::collection::vec(row, 1..6).prop_map(|rows| {
        let mut m = MultisetInstance::new();
        for (p, x, y, n) in rows {
            m.add(Atom::new(p, vec![Term::int(x), Term::int(y)]), n).unwrap();
        }
        m
    })
}

const RULES: [&str; 8] = [
    "p(X,Y) :- e(X,Y).",
    "p(X,Y) :- f(X,Y).",
    "p(X,Z) :- e(X,Y), f(Y,Z).",
    "q(X) :- p(X,Y).",
    "q(Y) :- e(X,Y), e(Y,X).",
    "s(X,Y) :- p(X,Y), q(Y).",
    "s(X,X) :- q(X), f(X,Y).",
    "q(X) :- s(X,Y), f(Y,X).",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_key_ignores_null_names_and_atom_order(p in pair(), shift in 1u32..50, rev in any::<bool>()) {
        // reverse the null numbering, then move it out of the way
        let renamed = p.rename(&|z| if rev { 4 - z + shift } else { z + shift });
        let mut shuffled = renamed.clone();
        shuffled.atoms.reverse();
        prop_assert_eq!(canonicalize(&p), canonicalize(&shuffled));
    }

    #[test]
    fn lifting_then_counting_tids_is_the_identity(d in bag()) {
        let lifted = transform::lift_edb(&d);
        prop_assert_eq!(lifted.len() as u64, d.total());
        prop_assert_eq!(transform::de_identify(lifted.atoms()), d);
    }

    #[test]
    fn multiplicity_matches_tree_count(picks in prop::collection::btree_set(0..RULES.len(), 1..5), d in bag()) {
        let text: String = picks.iter().enumerate().map(|(i, &k)| format!("r{i}: {}\n", RULES[k])).collect();
        let p = parse_program(&text).unwrap();
        let engine = Engine::new(&p, &d).unwrap();
        let model = chase::standard_model(&p, &d, usize::MAX).unwrap();
        let opts = TreeOptions { max_depth: 24, limit: 2_000 };
        for a in model.atoms() {
            let e = trees::enumerate_pts(&p, &d, a, &opts).unwrap();
            match engine.multiplicity(a).unwrap().multiplicity {
                Multiplicity::Finite(n) => {
                    prop_assert!(e.complete);
                    prop_assert_eq!(n, e.count().into(), "{}", a);
                }
                Multiplicity::Infinite => prop_assert!(!e.complete, "{}", a),
            }
        }
    }

    #[test]
    fn pbbs_matches_bag_eval_on_non_recursive_rules(picks in prop::collection::btree_set(0..6usize, 1..5), d in bag()) {
        let text: String = picks.iter().enumerate().map(|(i, &k)| format!("r{i}: {}\n", RULES[k])).collect();
        let p = parse_program(&text).unwrap();
        let pb = chase::pbbs_bounded(&p, &d, usize::MAX).unwrap();
        prop_assert!(pb.saturated);
        let (bag, infinite) = crate::multiplicity::bag(&p, &d, usize::MAX).unwrap();
        prop_assert!(infinite.is_empty());
        prop_assert_eq!(pb.bag, bag);
    }

    #[test]
    fn union_adds_and_dedup_flattens(d in bag()) {
        let env: mra::Env = transform::by_predicate(&d).into_iter().collect();
        let rels: Vec<&str> = env.keys().map(|k| &**k).collect();
        let r = MraExpr::rel(rels[0]);
        let s = MraExpr::rel(rels[rels.len() - 1]);
        let both = mra::eval(&MraExpr::union(r.clone(), s.clone()), &env).unwrap();
        let left = mra::eval(&r, &env).unwrap();
        let right = mra::eval(&s, &env).unwrap();
        prop_assert_eq!(both.total(), left.total() + right.total());
        let flat = mra::eval(&MraExpr::dedup(MraExpr::union(r, s)), &env).unwrap();
        prop_assert_eq!(flat.len(), both.len());
        prop_assert!(flat.iter().all(|(_, n)| n == 1));
    }

    #[test]
    fn serialized_facts_parse_back(d in bag()) {
        prop_assert_eq!(parse_edb(&crate::parser::serialize_instance(&d)).unwrap(), d);
    }
}
