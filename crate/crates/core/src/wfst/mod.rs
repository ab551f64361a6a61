//! Tropical-semiring weighted transducers: data model, text format,
//! composition and an exhaustive transduction reference.

mod compose;
mod fst;
mod symbols;
mod text;
mod transduce;
mod weight;

use thiserror::Error;

pub use compose::compose;
pub use fst::{Arc, Label, SortKey, StateId, Wfst, EPSILON};
pub use symbols::{SymbolTable, EPSILON_SYMBOL};
pub use text::{read_fst_text, write_fst_text};
pub use transduce::transduce_all;
pub use weight::Weight;

#[derive(Debug, Error)]
pub enum FstError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("symbol table: {0}")]
    Symbol(String),
    #[error("path enumeration exceeded its budget")]
    PathOverflow,
}
