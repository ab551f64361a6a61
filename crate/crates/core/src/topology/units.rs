use crate::wfst::{Label, SymbolTable};

use super::TopologyError;

/// Acoustic token inventory.
///
/// Acoustic index `i` (a column of the log-likelihood matrix) is WFST label
/// `i + 1`, so a units symbol table written as `<eps> 0`, then the tokens with
/// ids `1..=N`, maps ids straight onto labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitInventory {
    units: SymbolTable,
    blank: usize,
    num_tokens: usize,
}

impl UnitInventory {
    pub fn new(units: SymbolTable, blank_symbol: &str) -> Result<Self, TopologyError> {
        let num_tokens = units.len() - 1;
        let dense = units
            .iter()
            .skip(1)
            .enumerate()
            .all(|(i, (l, _))| l as usize == i + 1);
        if !dense {
            return Err(TopologyError::InvalidInventory(
                "unit ids must be dense 1..=N".to_string(),
            ));
        }
        let blank = units
            .label(blank_symbol)
            .filter(|&l| l != 0)
            .ok_or_else(|| {
                TopologyError::InvalidInventory(format!(
                    "blank symbol {blank_symbol:?} not in units"
                ))
            })?;
        let inv = UnitInventory {
            units,
            blank: blank as usize - 1,
            num_tokens,
        };
        if inv.num_nonblank() == 0 {
            return Err(TopologyError::InvalidInventory(
                "at least one non-blank unit is required".to_string(),
            ));
        }
        Ok(inv)
    }

    /// Inventory of `symbols` in order; `symbols[blank]` is the blank.
    pub fn from_symbols(symbols: &[&str], blank: usize) -> Result<Self, TopologyError> {
        let units = SymbolTable::from_symbols(symbols.iter().copied())?;
        let blank_symbol = symbols.get(blank).ok_or_else(|| {
            TopologyError::InvalidInventory(format!("blank index {blank} out of range"))
        })?;
        Self::new(units, blank_symbol)
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.units
    }

    /// Acoustic index of the blank token.
    pub fn blank(&self) -> usize {
        self.blank
    }

    /// Number of acoustic tokens including blank (the log-likelihood row width).
    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    pub fn num_nonblank(&self) -> usize {
        self.num_tokens - 1
    }

    pub fn label_of(index: usize) -> Label {
        index as Label + 1
    }

    pub fn index_of(label: Label) -> usize {
        label as usize - 1
    }

    /// Acoustic indices of the non-blank units, ascending.
    pub fn nonblank(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_tokens).filter(move |&i| i != self.blank)
    }

    pub fn index(&self, symbol: &str) -> Option<usize> {
        self.units
            .label(symbol)
            .filter(|&l| l != 0)
            .map(Self::index_of)
    }
}

/// Reference CTC collapse: merge adjacent repeats, then drop blanks.
pub fn ctc_collapse(seq: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &tok in seq {
        if prev != Some(tok) && tok != blank {
            out.push(tok);
        }
        prev = Some(tok);
    }
    out
}
