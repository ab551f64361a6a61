use std::collections::BTreeMap;

use super::{FstError, Label, StateId, Weight, Wfst, EPSILON};

/// Enumerates every accepting path of `fst` whose non-epsilon input labels
/// spell `input`, returning each distinct output sequence (epsilons removed)
/// with its minimum path cost, sorted by output.
///
/// Exhaustive and exponential; meant as a reference for small machines.
/// `max_paths` bounds the number of partial paths explored, which also
/// catches epsilon-input cycles.
pub fn transduce_all(
    fst: &Wfst,
    input: &[Label],
    max_paths: usize,
) -> Result<Vec<(Vec<Label>, Weight)>, FstError> {
    let mut found = BTreeMap::new();
    if let Some(start) = fst.start() {
        let mut walker = Walker {
            fst,
            input,
            budget: max_paths,
            output: Vec::new(),
            found: &mut found,
        };
        walker.visit(start, 0, Weight::ONE)?;
    }
    Ok(found.into_iter().collect())
}

struct Walker<'a> {
    fst: &'a Wfst,
    input: &'a [Label],
    budget: usize,
    output: Vec<Label>,
    found: &'a mut BTreeMap<Vec<Label>, Weight>,
}

impl Walker<'_> {
    fn visit(&mut self, state: StateId, pos: usize, cost: Weight) -> Result<(), FstError> {
        if pos == self.input.len() && self.fst.is_final(state) {
            let total = cost.times(self.fst.final_weight(state));
            let entry = self
                .found
                .entry(self.output.clone())
                .or_insert(Weight::ZERO);
            *entry = entry.plus(total);
        }
        for arc in self.fst.arcs(state) {
            let next_pos = if arc.ilabel == EPSILON {
                pos
            } else if pos < self.input.len() && self.input[pos] == arc.ilabel {
                pos + 1
            } else {
                continue;
            };
            if self.budget == 0 {
                return Err(FstError::PathOverflow);
            }
            self.budget -= 1;
            let pushed = arc.olabel != EPSILON;
            if pushed {
                self.output.push(arc.olabel);
            }
            self.visit(arc.nextstate, next_pos, cost.times(arc.weight))?;
            if pushed {
                self.output.pop();
            }
        }
        Ok(())
    }
}
