use std::collections::{HashMap, VecDeque};

use super::{Arc, Label, StateId, Wfst, EPSILON};

/// Weighted composition `a ∘ b` in the tropical semiring.
///
/// Epsilons are handled without a filter: an `ε` output on `a` advances `a`
/// alone and an `ε` input on `b` advances `b` alone. This can yield several
/// equal-weight paths for one alignment, which is harmless under `min`.
/// The result is trimmed with [`Wfst::connect`]; no accepting path gives the
/// empty machine.
pub fn compose(a: &Wfst, b: &Wfst) -> Wfst {
    let (Some(a_start), Some(b_start)) = (a.start(), b.start()) else {
        return Wfst::new();
    };

    // Per-state arcs of `b` ordered by ilabel so matches are a binary search.
    let b_sorted: Vec<Vec<Arc>> = b
        .states()
        .map(|s| {
            let mut arcs = b.arcs(s).to_vec();
            arcs.sort_by_key(|arc| arc.ilabel);
            arcs
        })
        .collect();
    let matches = |state: StateId, label: Label| -> &[Arc] {
        let arcs = &b_sorted[state as usize];
        let lo = arcs.partition_point(|arc| arc.ilabel < label);
        let hi = arcs.partition_point(|arc| arc.ilabel <= label);
        &arcs[lo..hi]
    };

    let mut out = Wfst::new();
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |pair: (StateId, StateId), out: &mut Wfst, queue: &mut VecDeque<_>| {
        *ids.entry(pair).or_insert_with(|| {
            let id = out.add_state();
            queue.push_back((pair, id));
            id
        })
    };

    let start = intern((a_start, b_start), &mut out, &mut queue);
    out.set_start(start);

    while let Some(((qa, qb), src)) = queue.pop_front() {
        out.set_final(src, a.final_weight(qa).times(b.final_weight(qb)));

        for arc in a.arcs(qa) {
            if arc.olabel == EPSILON {
                let dst = intern((arc.nextstate, qb), &mut out, &mut queue);
                out.add_arc(src, Arc::new(arc.ilabel, EPSILON, arc.weight, dst));
            } else {
                for barc in matches(qb, arc.olabel) {
                    let dst = intern((arc.nextstate, barc.nextstate), &mut out, &mut queue);
                    out.add_arc(
                        src,
                        Arc::new(arc.ilabel, barc.olabel, arc.weight.times(barc.weight), dst),
                    );
                }
            }
        }
        for barc in matches(qb, EPSILON) {
            let dst = intern((qa, barc.nextstate), &mut out, &mut queue);
            out.add_arc(src, Arc::new(EPSILON, barc.olabel, barc.weight, dst));
        }
    }

    out.connect()
}
