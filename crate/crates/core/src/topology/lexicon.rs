use crate::wfst::{Arc, SymbolTable, Wfst, EPSILON};

use super::{TopologyError, UnitInventory};

#[derive(Clone, Debug, PartialEq)]
pub struct LexiconEntry {
    pub word: String,
    /// Acoustic unit indices (never the blank).
    pub pronunciation: Vec<usize>,
    pub cost: f64,
}

impl LexiconEntry {
    pub fn new(word: impl Into<String>, pronunciation: Vec<usize>) -> Self {
        LexiconEntry {
            word: word.into(),
            pronunciation,
            cost: 0.0,
        }
    }
}

/// Where the word label sits along its pronunciation path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OlabelPlacement {
    /// On the first unit arc, so LM and boost costs apply as early as possible.
    #[default]
    First,
    /// On the last unit arc.
    Last,
}

/// Parses `word<TAB>unit unit ...` lines.
pub fn read_lexicon(text: &str, inv: &UnitInventory) -> Result<Vec<LexiconEntry>, TopologyError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| TopologyError::Parse { line: idx + 1, msg };
        let (word, units) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `word<TAB>units`".to_string()))?;
        let word = word.trim();
        if word.is_empty() {
            return Err(parse_err("empty word".to_string()));
        }
        let pronunciation = units
            .split_whitespace()
            .map(|u| {
                inv.index(u).ok_or_else(|| TopologyError::UnknownUnit {
                    word: word.to_string(),
                    unit: u.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        entries.push(LexiconEntry::new(word, pronunciation));
    }
    Ok(entries)
}

/// Lexicon transducer with word labels on the first unit arc.
pub fn build_l(
    entries: &[LexiconEntry],
    inv: &UnitInventory,
    words: &SymbolTable,
) -> Result<Wfst, TopologyError> {
    build_l_with(entries, inv, words, OlabelPlacement::First)
}

/// One path per entry from the shared start state, closed back to it by an
/// `ε:ε` arc. The start state is the only final state.
pub fn build_l_with(
    entries: &[LexiconEntry],
    inv: &UnitInventory,
    words: &SymbolTable,
    placement: OlabelPlacement,
) -> Result<Wfst, TopologyError> {
    if entries.is_empty() {
        return Err(TopologyError::EmptyLexicon);
    }
    let mut l = Wfst::new();
    let start = l.add_state();
    l.set_start(start);
    l.set_final(start, 0.0);

    for entry in entries {
        let word = words
            .label(&entry.word)
            .filter(|&w| w != EPSILON)
            .ok_or_else(|| TopologyError::UnknownWord(entry.word.clone()))?;
        if entry.pronunciation.is_empty() {
            return Err(TopologyError::EmptyPronunciation(entry.word.clone()));
        }
        for &u in &entry.pronunciation {
            if u >= inv.num_tokens() || u == inv.blank() {
                return Err(TopologyError::UnknownUnit {
                    word: entry.word.clone(),
                    unit: u.to_string(),
                });
            }
        }

        let last = entry.pronunciation.len() - 1;
        let mut state = start;
        for (i, &u) in entry.pronunciation.iter().enumerate() {
            let olabel = match placement {
                OlabelPlacement::First if i == 0 => word,
                OlabelPlacement::Last if i == last => word,
                _ => EPSILON,
            };
            let weight = if i == 0 { entry.cost } else { 0.0 };
            let next = l.add_state();
            l.add_arc(
                state,
                Arc::new(UnitInventory::label_of(u), olabel, weight, next),
            );
            state = next;
        }
        l.add_arc(state, Arc::new(EPSILON, EPSILON, 0.0, start));
    }
    Ok(l)
}
