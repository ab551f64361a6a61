//! Decoding-graph construction: CTC token transducers, lexicon, ARPA grammar
//! and their composition.

mod arpa;
mod lexicon;
mod tlg;
mod token;
mod units;

use thiserror::Error;

use crate::wfst::FstError;

pub use arpa::{
    build_g_arpa, log10_to_cost, ArpaModel, Grammar, NGram, SENTENCE_END, SENTENCE_START,
};
pub use lexicon::{build_l, build_l_with, read_lexicon, LexiconEntry, OlabelPlacement};
pub use tlg::build_tlg;
pub use token::{build_t, build_t_compact, build_t_normal, Topology};
pub use units::{ctc_collapse, UnitInventory};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid unit inventory: {0}")]
    InvalidInventory(String),
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("word {word:?} uses unknown unit {unit:?}")]
    UnknownUnit { word: String, unit: String },
    #[error("word {0:?} has an empty pronunciation")]
    EmptyPronunciation(String),
    #[error("word {0:?} is not in the word table")]
    UnknownWord(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty decoding graph (alphabet mismatch between T, L and G?)")]
    EmptyGraph,
    #[error(transparent)]
    Fst(#[from] FstError),
}
