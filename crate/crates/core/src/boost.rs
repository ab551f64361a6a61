//! Per-utterance word boosting.
//!
//! A boost table is the single-state acceptor `B` with one self-loop per
//! boosted word. Because `B` never changes state, decoding against
//! `TLG ∘ B` reduces to adding `table[olabel]` whenever the decoder crosses
//! an arc with a word label.

use std::collections::HashMap;

use thiserror::Error;

use crate::wfst::{Label, SymbolTable, EPSILON};

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("epsilon cannot be boosted")]
    Epsilon,
}

/// Word label → additive path cost. A boost of magnitude `m` is stored as `-m`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoostTable {
    costs: HashMap<Label, f64>,
}

impl BoostTable {
    pub fn new() -> Self {
        BoostTable::default()
    }

    /// Boosts `word` by `magnitude` (cost `-magnitude`).
    pub fn boost(&mut self, word: Label, magnitude: f64) -> Result<(), BoostError> {
        if word == EPSILON {
            return Err(BoostError::Epsilon);
        }
        self.costs.insert(word, -magnitude);
        Ok(())
    }

    #[inline]
    pub fn cost(&self, word: Label) -> Option<f64> {
        self.costs.get(&word).copied()
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// Entries sorted by label.
    pub fn entries(&self) -> Vec<(Label, f64)> {
        let mut v: Vec<_> = self.costs.iter().map(|(&l, &c)| (l, c)).collect();
        v.sort_by_key(|&(l, _)| l);
        v
    }

    /// Largest boost magnitude in the table (0 when empty).
    pub fn max_magnitude(&self) -> f64 {
        self.costs.values().map(|c| -c).fold(0.0, f64::max)
    }
}

/// Words from a boost file that are not in the vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SkippedWords {
    pub words: Vec<String>,
}

impl SkippedWords {
    pub fn count(&self) -> usize {
        self.words.len()
    }
}

/// Parses `word<TAB>magnitude` lines. Out-of-vocabulary words are skipped and
/// reported, since they cannot appear on any decoding-graph arc.
pub fn load_boost_table(
    text: &str,
    words: &SymbolTable,
) -> Result<(BoostTable, SkippedWords), BoostError> {
    let mut table = BoostTable::new();
    let mut skipped = SkippedWords::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| BoostError::Parse { line: idx + 1, msg };
        let mut fields = line.split_whitespace();
        let (Some(word), Some(magnitude), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(err(format!(
                "expected `word<TAB>magnitude`, found {line:?}"
            )));
        };
        let magnitude: f64 = magnitude
            .parse()
            .ok()
            .filter(|m: &f64| m.is_finite())
            .ok_or_else(|| err(format!("invalid boost magnitude {magnitude:?}")))?;
        match words.label(word).filter(|&l| l != EPSILON) {
            Some(label) => table.boost(label, magnitude)?,
            None => skipped.words.push(word.to_string()),
        }
    }
    Ok((table, skipped))
}
