//! AT&T / OpenFST-compatible text serialization.
//!
//! Arc lines are `src dst ilabel olabel [weight]`, final lines are
//! `state [weight]`. A missing weight means `0`. The source state of the first
//! line is the start state.

use std::fmt::Write as _;

use super::{Arc, FstError, Label, StateId, Weight, Wfst};

pub fn read_fst_text(text: &str) -> Result<Wfst, FstError> {
    enum Line {
        Arc(StateId, Arc),
        Final(StateId, Weight),
    }

    let mut lines = Vec::new();
    let mut max_state: Option<StateId> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: String| FstError::Parse { line: lineno, msg };
        let parsed = match fields.len() {
            1 | 2 => {
                let state = parse_id(fields[0], "state").map_err(err)?;
                let weight = match fields.get(1) {
                    Some(w) => parse_weight(w).map_err(err)?,
                    None => Weight::ONE,
                };
                Line::Final(state, weight)
            }
            4 | 5 => {
                let src = parse_id(fields[0], "state").map_err(err)?;
                let dst = parse_id(fields[1], "state").map_err(err)?;
                let ilabel = parse_id(fields[2], "label").map_err(err)?;
                let olabel = parse_id(fields[3], "label").map_err(err)?;
                let weight = match fields.get(4) {
                    Some(w) => parse_weight(w).map_err(err)?,
                    None => Weight::ONE,
                };
                max_state = max_state.max(Some(dst));
                Line::Arc(src, Arc::new(ilabel, olabel, weight, dst))
            }
            n => return Err(err(format!("expected 1, 2, 4 or 5 fields, found {n}"))),
        };
        let state = match &parsed {
            Line::Arc(s, _) | Line::Final(s, _) => *s,
        };
        max_state = max_state.max(Some(state));
        lines.push(parsed);
    }

    let mut fst = Wfst::new();
    let Some(max_state) = max_state else {
        return Ok(fst);
    };
    fst.ensure_state(max_state);
    let start = match &lines[0] {
        Line::Arc(s, _) | Line::Final(s, _) => *s,
    };
    fst.set_start(start);
    for line in lines {
        match line {
            Line::Arc(src, arc) => fst.add_arc(src, arc),
            Line::Final(state, weight) => fst.set_final(state, weight),
        }
    }
    Ok(fst)
}

fn parse_id(field: &str, what: &str) -> Result<Label, String> {
    if field.starts_with('-') {
        return Err(format!("negative {what} {field:?}"));
    }
    field
        .parse::<u32>()
        .map_err(|_| format!("invalid {what} {field:?}"))
}

fn parse_weight(field: &str) -> Result<Weight, String> {
    match field {
        "Infinity" | "inf" => Ok(Weight::ZERO),
        _ => field
            .parse::<f64>()
            .map(Weight)
            .map_err(|_| format!("invalid weight {field:?}")),
    }
}

/// Writes the start state first, then the remaining states in ascending
/// order. Each state's final line follows its arcs; weights are always printed.
pub fn write_fst_text(fst: &Wfst) -> String {
    let mut out = String::new();
    let Some(start) = fst.start() else {
        return out;
    };
    let order = std::iter::once(start).chain(fst.states().filter(|&s| s != start));
    for state in order {
        for arc in fst.arcs(state) {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                state, arc.nextstate, arc.ilabel, arc.olabel, arc.weight
            );
        }
        if fst.is_final(state) {
            let _ = writeln!(out, "{} {}", state, fst.final_weight(state));
        }
    }
    out
}
