use std::sync::Arc;

use rayon::prelude::*;

use crate::boost::BoostTable;
use crate::logits::LogLikelihoods;

use super::{DecodeError, DecodeState, DecoderConfig, DecodingGraph, Hypothesis};

/// Decodes one utterance start to finish.
pub fn decode_utterance(
    graph: &Arc<DecodingGraph>,
    config: &DecoderConfig,
    boost: Option<&Arc<BoostTable>>,
    frames: &LogLikelihoods,
) -> Result<Hypothesis, DecodeError> {
    run_channel(graph, config, boost, frames)?.best_path()
}

fn run_channel(
    graph: &Arc<DecodingGraph>,
    config: &DecoderConfig,
    boost: Option<&Arc<BoostTable>>,
    frames: &LogLikelihoods,
) -> Result<DecodeState, DecodeError> {
    let mut channel = DecodeState::new(Arc::clone(graph), *config)?;
    if let Some(table) = boost {
        channel.attach_boost(Arc::clone(table))?;
    }
    channel.advance_frames(frames)?;
    Ok(channel)
}

/// Decodes utterances in parallel over `workers` threads. Each channel runs
/// sequentially on one worker, so results do not depend on `workers`.
/// Per-utterance failures are reported in place; order is preserved.
pub fn decode_batch(
    graph: &Arc<DecodingGraph>,
    config: &DecoderConfig,
    utterances: &[LogLikelihoods],
    workers: usize,
) -> Result<Vec<Result<Hypothesis, DecodeError>>, DecodeError> {
    decode_batch_with_boost(graph, config, None, utterances, workers)
}

pub fn decode_batch_with_boost(
    graph: &Arc<DecodingGraph>,
    config: &DecoderConfig,
    boost: Option<&Arc<BoostTable>>,
    utterances: &[LogLikelihoods],
    workers: usize,
) -> Result<Vec<Result<Hypothesis, DecodeError>>, DecodeError> {
    let channels = decode_batch_channels(graph, config, boost, utterances, workers)?;
    Ok(channels
        .into_iter()
        .map(|ch| ch.and_then(|c| c.best_path()))
        .collect())
}

/// Like [`decode_batch_with_boost`] but returns the finished channels, which
/// expose the full frame history.
pub fn decode_batch_channels(
    graph: &Arc<DecodingGraph>,
    config: &DecoderConfig,
    boost: Option<&Arc<BoostTable>>,
    utterances: &[LogLikelihoods],
    workers: usize,
) -> Result<Vec<Result<DecodeState, DecodeError>>, DecodeError> {
    if workers == 0 {
        return Err(DecodeError::InvalidConfig(
            "workers must be at least 1".into(),
        ));
    }
    config.validate()?;
    if workers == 1 {
        return Ok(utterances
            .iter()
            .map(|u| run_channel(graph, config, boost, u))
            .collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DecodeError::WorkerPool(e.to_string()))?;
    Ok(pool.install(|| {
        utterances
            .par_iter()
            .map(|u| run_channel(graph, config, boost, u))
            .collect()
    }))
}
