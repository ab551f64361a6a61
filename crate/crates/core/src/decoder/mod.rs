//! Frame-synchronous token-passing beam search over a decoding graph.
//!
//! Each frame runs three phases: emitting expansion over arcs that consume
//! the frame, nonemitting (epsilon-input) relaxation, and pruning. The
//! survivors are then appended to the channel's frame history, from which the
//! best path is recovered by following backpointers.

mod batch;
mod channel;
mod graph;
mod history;
mod prune;

use thiserror::Error;

pub use batch::{decode_batch, decode_batch_channels, decode_batch_with_boost, decode_utterance};
pub use channel::DecodeState;
pub use graph::DecodingGraph;
pub use history::{FrameHistory, Layer, Record, ROOT};
pub use prune::{prune, Token};

use crate::wfst::{Label, SymbolTable};

pub const DEFAULT_BEAM: f64 = 17.0;
pub const DEFAULT_MAX_ACTIVE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoderConfig {
    /// Cost gap from the best token beyond which tokens are pruned.
    pub beam: f64,
    /// Maximum number of tokens surviving a frame.
    pub max_active: usize,
    pub acoustic_scale: f64,
    /// Minimum improvement for a nonemitting relaxation to count.
    pub nonemitting_relax_epsilon: f64,
    /// Cap on nonemitting relaxation rounds per frame; `None` means twice the
    /// number of graph states.
    pub max_nonemitting_iters: Option<usize>,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam: DEFAULT_BEAM,
            max_active: DEFAULT_MAX_ACTIVE,
            acoustic_scale: 1.0,
            nonemitting_relax_epsilon: 1e-9,
            max_nonemitting_iters: None,
        }
    }
}

impl DecoderConfig {
    /// Search without pruning.
    pub fn exhaustive() -> Self {
        DecoderConfig {
            beam: f64::INFINITY,
            max_active: usize::MAX,
            ..DecoderConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(self.beam > 0.0) {
            return Err(DecodeError::InvalidConfig(format!(
                "beam must be positive, got {}",
                self.beam
            )));
        }
        if self.max_active == 0 {
            return Err(DecodeError::InvalidConfig(
                "max_active must be at least 1".into(),
            ));
        }
        if !(self.acoustic_scale > 0.0) || !self.acoustic_scale.is_finite() {
            return Err(DecodeError::InvalidConfig(format!(
                "acoustic_scale must be positive, got {}",
                self.acoustic_scale
            )));
        }
        if !(self.nonemitting_relax_epsilon >= 0.0) {
            return Err(DecodeError::InvalidConfig(
                "nonemitting_relax_epsilon must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Least-cost path through the decoding graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    /// Output labels along the path, epsilons removed.
    pub words: Vec<Label>,
    pub total_cost: f64,
    pub frame_count: usize,
}

impl Hypothesis {
    /// Space-joined word symbols; unknown labels print as `#<id>`.
    pub fn text(&self, words: &SymbolTable) -> String {
        self.words
            .iter()
            .map(|&w| {
                words
                    .symbol(w)
                    .map_or_else(|| format!("#{w}"), str::to_string)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("decoding graph is empty")]
    EmptyGraph,
    #[error("invalid decoder config: {0}")]
    InvalidConfig(String),
    #[error("frame has {found} log-likelihoods, expected {expected}")]
    FrameWidth { expected: usize, found: usize },
    #[error("graph ilabel {label} has no column in a {width}-token frame")]
    LabelOutOfRange { label: Label, width: usize },
    #[error("nonemitting expansion did not converge at frame {frame} (epsilon cycle?)")]
    NonemittingCap { frame: usize },
    #[error("no frames decoded")]
    NoFrames,
    #[error("boost table must be attached before the first frame")]
    BoostAfterStart,
    #[error("worker pool: {0}")]
    WorkerPool(String),
}
