use std::collections::BTreeMap;

use ctc_wfst::wfst::{compose, transduce_all, Arc, Label, SortKey, Weight, Wfst};
use proptest::prelude::*;

/// Small random transducer whose epsilon-input arcs only move forward, so
/// every input has finitely many paths.
fn arb_fst(alphabet: u32) -> impl Strategy<Value = Wfst> {
    (1usize..=8)
        .prop_flat_map(move |n| {
            let arcs = prop::collection::vec(
                (0..n, 0..n, 0..=alphabet, 0..=alphabet, 0u32..40),
                0..(3 * n),
            );
            let finals = prop::collection::vec(prop::option::weighted(0.5, 0u32..20), n);
            (Just(n), arcs, finals)
        })
        .prop_map(|(n, arcs, finals)| {
            let mut f = Wfst::new();
            for _ in 0..n {
                f.add_state();
            }
            f.set_start(0);
            for (s, final_w) in finals.into_iter().enumerate() {
                if let Some(w) = final_w {
                    f.set_final(s as u32, f64::from(w) / 8.0);
                }
            }
            for (from, to, i, o, w) in arcs {
                if i == 0 && to <= from {
                    continue;
                }
                f.add_arc(from as u32, Arc::new(i, o, f64::from(w) / 8.0, to as u32));
            }
            f
        })
}

fn inputs(alphabet: u32, max_len: usize) -> Vec<Vec<Label>> {
    let mut all = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for l in 1..=alphabet {
                let mut t: Vec<Label> = s.clone();
                t.push(l);
                next.push(t);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

fn relation(f: &Wfst, x: &[Label]) -> BTreeMap<Vec<Label>, f64> {
    transduce_all(f, x, 1_000_000)
        .unwrap()
        .into_iter()
        .map(|(o, w)| (o, w.value()))
        .collect()
}

fn assert_same(
    a: &BTreeMap<Vec<Label>, f64>,
    b: &BTreeMap<Vec<Label>, f64>,
) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in a {
        prop_assert!((v - b[k]).abs() < 1e-9, "{:?}: {} vs {}", k, v, b[k]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_relational_composition(a in arb_fst(3), b in arb_fst(3)) {
        let c = compose(&a, &b);
        for x in inputs(3, 3) {
            let mut expected: BTreeMap<Vec<Label>, f64> = BTreeMap::new();
            for (y, wy) in relation(&a, &x) {
                for (z, wz) in relation(&b, &y) {
                    let total = wy + wz;
                    let e = expected.entry(z).or_insert(f64::INFINITY);
                    *e = e.min(total);
                }
            }
            assert_same(&relation(&c, &x), &expected)?;
        }
    }

    #[test]
    fn arc_sort_keeps_paths(a in arb_fst(4)) {
        for key in [SortKey::ILabel, SortKey::OLabel] {
            let sorted = a.clone().arc_sorted(key);
            prop_assert!(sorted.is_arc_sorted(key));
            prop_assert_eq!(sorted.num_arcs(), a.num_arcs());
            for x in inputs(4, 2) {
                assert_same(&relation(&sorted, &x), &relation(&a, &x))?;
            }
        }
    }

    #[test]
    fn connect_keeps_paths(a in arb_fst(2)) {
        let trimmed = a.connect();
        for x in inputs(2, 3) {
            assert_same(&relation(&trimmed, &x), &relation(&a, &x))?;
        }
    }
}

#[test]
fn semiring_identities() {
    let w = Weight(1.25);
    assert_eq!(w.times(Weight::ONE), w);
    assert_eq!(w.plus(Weight::ZERO), w);
    assert!(w.times(Weight::ZERO).is_zero());
}
