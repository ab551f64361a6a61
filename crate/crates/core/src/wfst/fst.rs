use std::collections::VecDeque;

use super::Weight;

pub type Label = u32;
pub type StateId = u32;

/// Label id reserved for epsilon on both tapes.
pub const EPSILON: Label = 0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub ilabel: Label,
    pub olabel: Label,
    pub weight: Weight,
    pub nextstate: StateId,
}

impl Arc {
    pub fn new(
        ilabel: Label,
        olabel: Label,
        weight: impl Into<Weight>,
        nextstate: StateId,
    ) -> Self {
        Arc {
            ilabel,
            olabel,
            weight: weight.into(),
            nextstate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
struct State {
    arcs: Vec<Arc>,
    final_weight: Weight,
}

impl State {
    fn new() -> Self {
        State {
            arcs: Vec::new(),
            final_weight: Weight::ZERO,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortKey {
    ILabel,
    OLabel,
}

/// Weighted transducer over the tropical semiring.
///
/// A `Wfst` with zero states is the canonical empty machine; it accepts nothing.
/// Graphs are built through the mutating methods and then treated as
/// immutable (shared behind `Arc` by the decoder).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Wfst {
    states: Vec<State>,
    start: StateId,
}

impl Wfst {
    pub fn new() -> Self {
        Wfst::default()
    }

    pub fn add_state(&mut self) -> StateId {
        self.states.push(State::new());
        (self.states.len() - 1) as StateId
    }

    /// Grows the state table so that `state` is a valid id.
    pub fn ensure_state(&mut self, state: StateId) {
        while self.states.len() <= state as usize {
            self.states.push(State::new());
        }
    }

    pub fn set_start(&mut self, state: StateId) {
        assert!(
            (state as usize) < self.states.len(),
            "start state {state} out of range"
        );
        self.start = state;
    }

    pub fn set_final(&mut self, state: StateId, weight: impl Into<Weight>) {
        self.states[state as usize].final_weight = weight.into();
    }

    pub fn add_arc(&mut self, state: StateId, arc: Arc) {
        assert!(
            (arc.nextstate as usize) < self.states.len(),
            "arc destination {} out of range",
            arc.nextstate
        );
        self.states[state as usize].arcs.push(arc);
    }

    /// Start state, or `None` for the empty machine.
    pub fn start(&self) -> Option<StateId> {
        if self.states.is_empty() {
            None
        } else {
            Some(self.start)
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.states.iter().map(|s| s.arcs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn arcs(&self, state: StateId) -> &[Arc] {
        &self.states[state as usize].arcs
    }

    /// Final weight; `Weight::ZERO` if the state is not final.
    pub fn final_weight(&self, state: StateId) -> Weight {
        self.states[state as usize].final_weight
    }

    pub fn is_final(&self, state: StateId) -> bool {
        !self.final_weight(state).is_zero()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        0..self.states.len() as StateId
    }

    /// Stable sort of every state's arcs by the chosen label.
    pub fn arc_sort(&mut self, key: SortKey) {
        for state in &mut self.states {
            match key {
                SortKey::ILabel => state.arcs.sort_by_key(|a| a.ilabel),
                SortKey::OLabel => state.arcs.sort_by_key(|a| a.olabel),
            }
        }
    }

    pub fn arc_sorted(mut self, key: SortKey) -> Self {
        self.arc_sort(key);
        self
    }

    pub fn is_arc_sorted(&self, key: SortKey) -> bool {
        self.states.iter().all(|s| {
            s.arcs.windows(2).all(|w| match key {
                SortKey::ILabel => w[0].ilabel <= w[1].ilabel,
                SortKey::OLabel => w[0].olabel <= w[1].olabel,
            })
        })
    }

    /// Removes states that are not both reachable from the start and able to
    /// reach a final state. Surviving states keep their relative order.
    /// Returns the empty machine when no accepting path exists.
    pub fn connect(&self) -> Wfst {
        let Some(start) = self.start() else {
            return Wfst::new();
        };
        let n = self.states.len();

        let mut accessible = vec![false; n];
        let mut queue = VecDeque::from([start]);
        accessible[start as usize] = true;
        while let Some(s) = queue.pop_front() {
            for arc in self.arcs(s) {
                let next = arc.nextstate as usize;
                if !accessible[next] {
                    accessible[next] = true;
                    queue.push_back(arc.nextstate);
                }
            }
        }

        let mut reverse: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for s in self.states() {
            for arc in self.arcs(s) {
                reverse[arc.nextstate as usize].push(s);
            }
        }
        let mut coaccessible = vec![false; n];
        for s in self.states() {
            if self.is_final(s) {
                coaccessible[s as usize] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &p in &reverse[s as usize] {
                if !coaccessible[p as usize] {
                    coaccessible[p as usize] = true;
                    queue.push_back(p);
                }
            }
        }

        if !(accessible[start as usize] && coaccessible[start as usize]) {
            return Wfst::new();
        }

        let mut remap = vec![StateId::MAX; n];
        let mut out = Wfst::new();
        for s in 0..n {
            if accessible[s] && coaccessible[s] {
                remap[s] = out.add_state();
            }
        }
        for s in 0..n {
            let id = remap[s];
            if id == StateId::MAX {
                continue;
            }
            out.states[id as usize].final_weight = self.states[s].final_weight;
            out.states[id as usize].arcs = self.states[s]
                .arcs
                .iter()
                .filter(|a| remap[a.nextstate as usize] != StateId::MAX)
                .map(|a| Arc {
                    nextstate: remap[a.nextstate as usize],
                    ..*a
                })
                .collect();
        }
        out.start = remap[start as usize];
        out
    }
}
