//! Chunked multi-stream decoding.
//!
//! Every stream owns a [`DecodeState`]. Between chunks the state sits in the
//! pool; a [`StreamPool::step`] gathers the channels of up to `max_batch`
//! ready streams, advances each over its next chunk, and scatters them back.
//! Because a channel carries its complete search state, chunk boundaries do not
//! change the result.

mod pool;
mod sim;

use std::time::Duration;

use thiserror::Error;

use crate::decoder::{DecodeError, DecoderConfig, Hypothesis};
use crate::logits::LogLikelihoods;

pub use pool::StreamPool;
pub use sim::{
    simulate_streams, ServiceTime, SimStream, StreamSimConfig, StreamSimReport, StreamTranscript,
};

pub type StreamId = u64;

#[derive(Clone, Debug, PartialEq)]
pub struct Chunk {
    pub stream: StreamId,
    pub frames: LogLikelihoods,
    /// Marks the final chunk; may carry no frames.
    pub is_last: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatcherConfig {
    pub max_batch: usize,
    /// How long the oldest ready chunk may wait for batch-mates.
    pub max_wait: Duration,
}

impl Default for BatcherConfig {
    fn default() -> Self {
        BatcherConfig {
            max_batch: 256,
            max_wait: Duration::from_millis(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoolConfig {
    pub decoder: DecoderConfig,
    pub batcher: BatcherConfig,
    /// Maximum number of streams not yet closed.
    pub max_streams: usize,
    /// Threads used to advance the channels of one batch.
    pub workers: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            decoder: DecoderConfig::default(),
            batcher: BatcherConfig::default(),
            max_streams: 4096,
            workers: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamStatus {
    Open,
    /// The last chunk has been pushed.
    Draining,
    Closed,
}

/// Outcome for one stream advanced by a [`StreamPool::step`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub stream: StreamId,
    /// Best partial hypothesis after the chunk; `None` while no frame has been
    /// decoded (a flush-only first chunk).
    pub partial: Result<Option<Hypothesis>, DecodeError>,
    /// The stream is draining with nothing queued; call `finish_stream`.
    pub input_complete: bool,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("unknown stream {0}")]
    UnknownStream(StreamId),
    #[error("stream {0} is closed")]
    Closed(StreamId),
    #[error("stream {0} already received its last chunk")]
    Draining(StreamId),
    #[error("stream {0} has not received its last chunk")]
    NotDraining(StreamId),
    #[error("stream {0} still has queued chunks")]
    PendingChunks(StreamId),
    #[error("empty chunk for stream {0} without is_last")]
    EmptyChunk(StreamId),
    #[error("stream capacity {0} reached")]
    Capacity(usize),
    #[error("invalid batcher config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}
