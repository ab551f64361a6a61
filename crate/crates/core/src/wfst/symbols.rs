use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::{FstError, Label, EPSILON};

pub const EPSILON_SYMBOL: &str = "<eps>";

/// Bidirectional symbol ↔ label map. Label 0 is always `<eps>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    by_symbol: HashMap<String, Label>,
    by_label: BTreeMap<Label, String>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::new()
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        let mut table = SymbolTable {
            by_symbol: HashMap::new(),
            by_label: BTreeMap::new(),
        };
        table.by_symbol.insert(EPSILON_SYMBOL.to_string(), EPSILON);
        table.by_label.insert(EPSILON, EPSILON_SYMBOL.to_string());
        table
    }

    /// Builds a table assigning labels 1, 2, ... to `symbols` in order.
    pub fn from_symbols<I, S>(symbols: I) -> Result<Self, FstError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = SymbolTable::new();
        for s in symbols {
            table.add_symbol(s)?;
        }
        Ok(table)
    }

    /// Registers `symbol` under the next free label, or returns its existing label.
    pub fn add_symbol(&mut self, symbol: impl Into<String>) -> Result<Label, FstError> {
        let symbol = symbol.into();
        if let Some(&label) = self.by_symbol.get(&symbol) {
            return Ok(label);
        }
        let label = self.by_label.keys().next_back().map_or(1, |&l| l + 1);
        self.insert(symbol, label)?;
        Ok(label)
    }

    fn insert(&mut self, symbol: String, label: Label) -> Result<(), FstError> {
        if self.by_symbol.contains_key(&symbol) {
            return Err(FstError::Symbol(format!("duplicate symbol {symbol:?}")));
        }
        if self.by_label.contains_key(&label) {
            return Err(FstError::Symbol(format!("duplicate id {label}")));
        }
        self.by_symbol.insert(symbol.clone(), label);
        self.by_label.insert(label, symbol);
        Ok(())
    }

    pub fn label(&self, symbol: &str) -> Option<Label> {
        self.by_symbol.get(symbol).copied()
    }

    pub fn symbol(&self, label: Label) -> Option<&str> {
        self.by_label.get(&label).map(String::as_str)
    }

    /// Number of registered symbols, including `<eps>`.
    pub fn len(&self) -> usize {
        self.by_label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 1
    }

    pub fn max_label(&self) -> Label {
        self.by_label.keys().next_back().copied().unwrap_or(EPSILON)
    }

    /// `(label, symbol)` pairs in ascending label order.
    pub fn iter(&self) -> impl Iterator<Item = (Label, &str)> {
        self.by_label.iter().map(|(&l, s)| (l, s.as_str()))
    }

    /// Parses `symbol id` lines. The first entry must be `<eps> 0`.
    pub fn read_text(text: &str) -> Result<Self, FstError> {
        let mut table = SymbolTable {
            by_symbol: HashMap::new(),
            by_label: BTreeMap::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |msg: String| FstError::Parse { line: lineno, msg };
            if fields.len() != 2 {
                return Err(err(format!("expected `symbol id`, found {raw:?}")));
            }
            let label: Label = fields[1]
                .parse()
                .map_err(|_| err(format!("invalid id {:?}", fields[1])))?;
            if table.by_label.is_empty() && (fields[0] != EPSILON_SYMBOL || label != EPSILON) {
                return Err(err(format!("first entry must be `{EPSILON_SYMBOL} 0`")));
            }
            table
                .insert(fields[0].to_string(), label)
                .map_err(|e| match e {
                    FstError::Symbol(msg) => err(msg),
                    other => other,
                })?;
        }
        if table.by_label.is_empty() {
            return Err(FstError::Parse {
                line: 0,
                msg: "empty symbol table".to_string(),
            });
        }
        Ok(table)
    }

    pub fn write_text(&self) -> String {
        let mut out = String::new();
        for (label, symbol) in self.iter() {
            let _ = writeln!(out, "{symbol} {label}");
        }
        out
    }
}
