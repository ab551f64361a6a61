//! WFST beam-search decoding for CTC acoustic-model outputs.
//!
//! - [`wfst`]: tropical-semiring transducers, text format, composition.
//! - [`topology`]: CTC token transducers, lexicon, ARPA grammar, `TLG`.
//! - [`decoder`]: frame-synchronous token-passing beam search.
//! - [`boost`]: per-utterance word boosting.
//! - [`streaming`]: chunked multi-stream decoding with dynamic batching.
//! - [`queueing`]: M/D/1 latency model, simulator and latency statistics.
//! - [`logits`]: log-likelihood matrices and the `LOGF` file format.

pub mod boost;
pub mod decoder;
pub mod logits;
pub mod queueing;
pub mod streaming;
pub mod topology;
pub mod wfst;
