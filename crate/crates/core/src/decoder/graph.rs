use crate::wfst::{Arc, Label, SortKey, StateId, Wfst, EPSILON};

use super::DecodeError;

/// A decoding graph prepared for search: arcs ilabel-sorted so each state's
/// epsilon-input arcs form a prefix of its arc list.
#[derive(Clone, Debug)]
pub struct DecodingGraph {
    fst: Wfst,
    first_emitting: Vec<u32>,
    max_ilabel: Label,
}

impl DecodingGraph {
    pub fn new(fst: Wfst) -> Result<Self, DecodeError> {
        if fst.is_empty() {
            return Err(DecodeError::EmptyGraph);
        }
        let fst = if fst.is_arc_sorted(SortKey::ILabel) {
            fst
        } else {
            fst.arc_sorted(SortKey::ILabel)
        };
        let first_emitting = fst
            .states()
            .map(|s| fst.arcs(s).partition_point(|a| a.ilabel == EPSILON) as u32)
            .collect();
        let max_ilabel = fst
            .states()
            .flat_map(|s| fst.arcs(s).iter().map(|a| a.ilabel))
            .max()
            .unwrap_or(EPSILON);
        Ok(DecodingGraph {
            fst,
            first_emitting,
            max_ilabel,
        })
    }

    pub fn fst(&self) -> &Wfst {
        &self.fst
    }

    pub fn start(&self) -> StateId {
        self.fst.start().expect("non-empty by construction")
    }

    pub fn num_states(&self) -> usize {
        self.fst.num_states()
    }

    pub fn max_ilabel(&self) -> Label {
        self.max_ilabel
    }

    #[inline]
    pub fn nonemitting_arcs(&self, state: StateId) -> &[Arc] {
        let arcs = self.fst.arcs(state);
        &arcs[..self.first_emitting[state as usize] as usize]
    }

    #[inline]
    pub fn emitting_arcs(&self, state: StateId) -> &[Arc] {
        let arcs = self.fst.arcs(state);
        &arcs[self.first_emitting[state as usize] as usize..]
    }

    #[inline]
    pub fn final_cost(&self, state: StateId) -> f64 {
        self.fst.final_weight(state).value()
    }
}
