//! Discrete-event simulation of chunked streams arriving at a constant rate
//! and served by a [`StreamPool`] under a dynamic batcher.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Instant;

use super::{Chunk, PoolConfig, StreamError, StreamPool};
use crate::boost::BoostTable;
use crate::decoder::{DecodeError, DecodingGraph, Hypothesis};
use crate::logits::LogLikelihoods;
use crate::queueing::{compute_stats, LatencySample, LatencyStats};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ServiceTime {
    /// Wall-clock duration of each step.
    Measured,
    /// Fixed duration per step, in seconds. Makes runs reproducible.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StreamSimConfig {
    pub pool: PoolConfig,
    pub chunk_frames: usize,
    /// Chunks per second sent by each stream.
    pub rate: f64,
    /// Audio duration of one frame, in milliseconds.
    pub frame_shift_ms: f64,
    pub service: ServiceTime,
}

impl Default for StreamSimConfig {
    fn default() -> Self {
        StreamSimConfig {
            pool: PoolConfig::default(),
            chunk_frames: 60,
            rate: 2.5,
            frame_shift_ms: 10.0,
            service: ServiceTime::Measured,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimStream {
    pub name: String,
    pub frames: LogLikelihoods,
    pub boost: Option<Arc<BoostTable>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamTranscript {
    pub name: String,
    pub result: Result<Hypothesis, StreamError>,
}

#[derive(Clone, Debug)]
pub struct StreamSimReport {
    /// In input order.
    pub transcripts: Vec<StreamTranscript>,
    /// One sample per processed chunk.
    pub samples: Vec<LatencySample>,
    pub stats: LatencyStats,
    pub steps: usize,
}

struct Arrival {
    time: f64,
    stream: usize,
    chunk: Chunk,
}

/// Streams start staggered over one chunk period and then send one chunk
/// every `1 / rate` seconds. Queue latency of a chunk is the time from its
/// arrival to the start of the step that consumed it; compute latency is that
/// step's service time.
pub fn simulate_streams(
    graph: Arc<DecodingGraph>,
    config: &StreamSimConfig,
    streams: &[SimStream],
) -> Result<StreamSimReport, StreamError> {
    if config.chunk_frames == 0 {
        return Err(StreamError::InvalidConfig(
            "chunk_frames must be positive".into(),
        ));
    }
    if !(config.rate > 0.0 && config.rate.is_finite()) {
        return Err(StreamError::InvalidConfig("rate must be positive".into()));
    }
    if let ServiceTime::Fixed(d) = config.service {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(StreamError::InvalidConfig(
                "service time must be non-negative".into(),
            ));
        }
    }
    let mut pool_config = config.pool;
    pool_config.max_streams = pool_config.max_streams.max(streams.len());
    let pool = StreamPool::new(graph, pool_config)?;

    let period = 1.0 / config.rate;
    let mut ids = Vec::with_capacity(streams.len());
    let mut arrivals = Vec::new();
    for (i, s) in streams.iter().enumerate() {
        let id = pool.create_stream(s.boost.clone())?;
        ids.push(id);
        let offset = period * i as f64 / streams.len() as f64;
        let mut parts = s.frames.chunks(config.chunk_frames);
        if parts.is_empty() {
            parts.push(LogLikelihoods::empty(s.frames.num_tokens()));
        }
        let n = parts.len();
        for (k, frames) in parts.into_iter().enumerate() {
            arrivals.push(Arrival {
                time: offset + period * k as f64,
                stream: i,
                chunk: Chunk {
                    stream: id,
                    frames,
                    is_last: k + 1 == n,
                },
            });
        }
    }
    arrivals.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.stream.cmp(&b.stream)));
    let index_of = |id| {
        ids.iter()
            .position(|&x| x == id)
            .expect("stream created by this run")
    };

    let max_wait = config.pool.batcher.max_wait.as_secs_f64();
    let max_batch = config.pool.batcher.max_batch;
    let mut pending: Vec<VecDeque<f64>> = vec![VecDeque::new(); streams.len()];
    let mut results: Vec<Option<Result<Hypothesis, StreamError>>> = vec![None; streams.len()];
    let mut samples = Vec::new();
    let mut arrivals = arrivals.into_iter().peekable();
    let mut now = 0.0f64;
    let mut last_done = 0.0f64;
    let mut steps = 0;

    loop {
        while let Some(a) = arrivals.next_if(|a| a.time <= now) {
            let empty_flush = a.chunk.frames.is_empty();
            pool.push_chunk(a.chunk)?;
            if !empty_flush {
                pending[a.stream].push_back(a.time);
            }
        }
        for id in pool.completed_streams() {
            let i = index_of(id);
            results[i] = Some(pool.finish_stream(id));
            last_done = last_done.max(now);
        }
        let ready = pending.iter().filter(|q| !q.is_empty()).count();
        let next_arrival = arrivals.peek().map(|a| a.time);
        if ready == 0 {
            match next_arrival {
                Some(t) => {
                    now = now.max(t);
                    continue;
                }
                None => break,
            }
        }
        let oldest = pending
            .iter()
            .filter_map(|q| q.front().copied())
            .fold(f64::INFINITY, f64::min);
        let deadline = oldest + max_wait;
        if ready < max_batch && now < deadline {
            now = next_arrival.map_or(deadline, |t| t.min(deadline));
            continue;
        }

        let started = Instant::now();
        let outputs = pool.step();
        let service = match config.service {
            ServiceTime::Measured => started.elapsed().as_secs_f64(),
            ServiceTime::Fixed(d) => d,
        };
        steps += 1;
        for out in &outputs {
            let i = index_of(out.stream);
            let arrived = pending[i].pop_front().expect("processed chunk was pending");
            samples.push(LatencySample::new(service * 1e3, (now - arrived) * 1e3));
            if let Err(e) = &out.partial {
                log::warn!("stream {}: {e}", streams[i].name);
            }
        }
        now += service;
        last_done = last_done.max(now);
    }

    let transcripts = streams
        .iter()
        .zip(results)
        .map(|(s, r)| StreamTranscript {
            name: s.name.clone(),
            result: r.unwrap_or(Err(StreamError::Decode(DecodeError::NoFrames))),
        })
        .collect();
    let mut stats = if samples.is_empty() {
        LatencyStats::default()
    } else {
        compute_stats(&samples).expect("samples are non-empty")
    };
    let audio_s: f64 = streams
        .iter()
        .map(|s| s.frames.num_frames() as f64 * config.frame_shift_ms / 1e3)
        .sum();
    stats.rtfx = if last_done > 0.0 {
        audio_s / last_done
    } else {
        0.0
    };
    Ok(StreamSimReport {
        transcripts,
        samples,
        stats,
        steps,
    })
}
