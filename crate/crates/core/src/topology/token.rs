//! CTC token transducers.

use crate::wfst::{Arc, StateId, Wfst, EPSILON};

use super::UnitInventory;

/// Which CTC rules the token transducer encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    /// Blanks are dropped and repeats merge unless a blank separates them.
    Normal,
    /// Blanks are dropped; repeats may or may not merge.
    Compact,
}

impl std::str::FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(Topology::Normal),
            "compact" => Ok(Topology::Compact),
            other => Err(format!(
                "unknown topology {other:?} (expected normal|compact)"
            )),
        }
    }
}

pub fn build_t(inv: &UnitInventory, topology: Topology) -> Wfst {
    match topology {
        Topology::Normal => build_t_normal(inv),
        Topology::Compact => build_t_compact(inv),
    }
}

/// State 0 plus one state per non-blank unit, all final. Unit states carry a
/// `u:ε` self-loop, a `blank:ε` arc back to 0 and `v:v` arcs to every other
/// unit state, so a repeat is emitted only after a blank.
pub fn build_t_normal(inv: &UnitInventory) -> Wfst {
    let (mut t, unit_states) = token_skeleton(inv);
    let blank = UnitInventory::label_of(inv.blank());
    for &(u, qu) in &unit_states {
        let lu = UnitInventory::label_of(u);
        t.add_arc(qu, Arc::new(lu, EPSILON, 0.0, qu));
        t.add_arc(qu, Arc::new(blank, EPSILON, 0.0, 0));
        for &(v, qv) in &unit_states {
            if v != u {
                let lv = UnitInventory::label_of(v);
                t.add_arc(qu, Arc::new(lv, lv, 0.0, qv));
            }
        }
    }
    t
}

/// Like the normal topology but unit states return to 0 through an `ε:ε` arc
/// instead of cross arcs, so `a a` may emit `a` or `a a`.
pub fn build_t_compact(inv: &UnitInventory) -> Wfst {
    let (mut t, unit_states) = token_skeleton(inv);
    for &(u, qu) in &unit_states {
        let lu = UnitInventory::label_of(u);
        t.add_arc(qu, Arc::new(lu, EPSILON, 0.0, qu));
        t.add_arc(qu, Arc::new(EPSILON, EPSILON, 0.0, 0));
    }
    t
}

// Shared part: start state with the blank self-loop and `u:u` entry arcs.
fn token_skeleton(inv: &UnitInventory) -> (Wfst, Vec<(usize, StateId)>) {
    let mut t = Wfst::new();
    let start = t.add_state();
    t.set_start(start);
    t.set_final(start, 0.0);
    let blank = UnitInventory::label_of(inv.blank());
    t.add_arc(start, Arc::new(blank, EPSILON, 0.0, start));

    let unit_states: Vec<(usize, StateId)> = inv
        .nonblank()
        .map(|u| {
            let q = t.add_state();
            t.set_final(q, 0.0);
            (u, q)
        })
        .collect();
    for &(u, q) in &unit_states {
        let l = UnitInventory::label_of(u);
        t.add_arc(start, Arc::new(l, l, 0.0, q));
    }
    (t, unit_states)
}
