use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Mutex, MutexGuard};

use rayon::prelude::*;

use super::{Chunk, PoolConfig, StepOutput, StreamError, StreamId, StreamStatus};
use crate::boost::BoostTable;
use crate::decoder::{DecodeError, DecodeState, DecodingGraph, Hypothesis};
use crate::logits::LogLikelihoods;

struct Queued {
    frames: LogLikelihoods,
    seq: u64,
}

struct Entry {
    status: StreamStatus,
    queue: VecDeque<Queued>,
}

#[derive(Default)]
struct Table {
    streams: BTreeMap<StreamId, Entry>,
    next_id: StreamId,
    next_seq: u64,
    live: usize,
}

/// Pool of decoding channels fed by per-stream chunk queues.
///
/// All methods take `&self`: producers may push chunks from other threads
/// while a step is decoding. Steps and finishes are serialized internally.
pub struct StreamPool {
    graph: Arc<DecodingGraph>,
    config: PoolConfig,
    workers: Option<rayon::ThreadPool>,
    table: Mutex<Table>,
    channels: Mutex<BTreeMap<StreamId, DecodeState>>,
    step_lock: Mutex<()>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl StreamPool {
    pub fn new(graph: Arc<DecodingGraph>, config: PoolConfig) -> Result<Self, StreamError> {
        config.decoder.validate()?;
        if config.batcher.max_batch == 0 {
            return Err(StreamError::InvalidConfig(
                "max_batch must be at least 1".into(),
            ));
        }
        if config.workers == 0 {
            return Err(StreamError::InvalidConfig(
                "workers must be at least 1".into(),
            ));
        }
        let workers = if config.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .build()
                    .map_err(|e| DecodeError::WorkerPool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(StreamPool {
            graph,
            config,
            workers,
            table: Mutex::new(Table::default()),
            channels: Mutex::new(BTreeMap::new()),
            step_lock: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    pub fn graph(&self) -> &Arc<DecodingGraph> {
        &self.graph
    }

    /// Opens a stream, optionally with its own boost table.
    pub fn create_stream(&self, boost: Option<Arc<BoostTable>>) -> Result<StreamId, StreamError> {
        let mut table = lock(&self.table);
        if table.live >= self.config.max_streams {
            return Err(StreamError::Capacity(self.config.max_streams));
        }
        let mut channel = DecodeState::new(self.graph.clone(), self.config.decoder)?;
        if let Some(b) = boost {
            channel.attach_boost(b)?;
        }
        let id = table.next_id;
        table.next_id += 1;
        table.live += 1;
        table.streams.insert(
            id,
            Entry {
                status: StreamStatus::Open,
                queue: VecDeque::new(),
            },
        );
        lock(&self.channels).insert(id, channel);
        Ok(id)
    }

    pub fn push_chunk(&self, chunk: Chunk) -> Result<(), StreamError> {
        let mut table = lock(&self.table);
        let seq = table.next_seq;
        let entry = table
            .streams
            .get_mut(&chunk.stream)
            .ok_or(StreamError::UnknownStream(chunk.stream))?;
        match entry.status {
            StreamStatus::Closed => return Err(StreamError::Closed(chunk.stream)),
            StreamStatus::Draining => return Err(StreamError::Draining(chunk.stream)),
            StreamStatus::Open => {}
        }
        if chunk.frames.is_empty() && !chunk.is_last {
            return Err(StreamError::EmptyChunk(chunk.stream));
        }
        if chunk.is_last {
            entry.status = StreamStatus::Draining;
        }
        // A bare flush has nothing to decode.
        if !chunk.frames.is_empty() {
            entry.queue.push_back(Queued {
                frames: chunk.frames,
                seq,
            });
            table.next_seq += 1;
        }
        Ok(())
    }

    pub fn status(&self, stream: StreamId) -> Option<StreamStatus> {
        lock(&self.table).streams.get(&stream).map(|e| e.status)
    }

    pub fn queued_chunks(&self, stream: StreamId) -> usize {
        lock(&self.table)
            .streams
            .get(&stream)
            .map_or(0, |e| e.queue.len())
    }

    /// Number of streams with at least one queued chunk.
    pub fn ready_streams(&self) -> usize {
        lock(&self.table)
            .streams
            .values()
            .filter(|e| !e.queue.is_empty())
            .count()
    }

    /// Streams that are draining with an empty queue.
    pub fn completed_streams(&self) -> Vec<StreamId> {
        lock(&self.table)
            .streams
            .iter()
            .filter(|(_, e)| e.status == StreamStatus::Draining && e.queue.is_empty())
            .map(|(&id, _)| id)
            .collect()
    }

    /// Advances up to `max_batch` ready streams by one chunk each.
    ///
    /// Streams are taken oldest queued chunk first, ties by stream id. The
    /// outputs are in stream id order; an idle pool returns nothing.
    pub fn step(&self) -> Vec<StepOutput> {
        let _serial = lock(&self.step_lock);
        let mut work: Vec<(StreamId, LogLikelihoods)> = {
            let mut table = lock(&self.table);
            let mut ready: Vec<(u64, StreamId)> = table
                .streams
                .iter()
                .filter_map(|(&id, e)| e.queue.front().map(|q| (q.seq, id)))
                .collect();
            ready.sort_unstable();
            ready.truncate(self.config.batcher.max_batch);
            ready
                .into_iter()
                .map(|(_, id)| {
                    let q = table
                        .streams
                        .get_mut(&id)
                        .and_then(|e| e.queue.pop_front())
                        .expect("ready stream has a queued chunk");
                    (id, q.frames)
                })
                .collect()
        };
        work.sort_unstable_by_key(|(id, _)| *id);

        let mut batch: Vec<(StreamId, DecodeState, LogLikelihoods)> = {
            let mut channels = lock(&self.channels);
            work.into_iter()
                .map(|(id, frames)| {
                    let ch = channels.remove(&id).expect("open stream owns a channel");
                    (id, ch, frames)
                })
                .collect()
        };

        let run = |(_, ch, frames): &mut (StreamId, DecodeState, LogLikelihoods)| {
            ch.advance_frames(frames).and_then(|()| partial(ch))
        };
        let results: Vec<Result<Option<Hypothesis>, DecodeError>> = match &self.workers {
            Some(pool) => pool.install(|| batch.par_iter_mut().map(run).collect()),
            None => batch.iter_mut().map(run).collect(),
        };

        {
            let mut channels = lock(&self.channels);
            let table = lock(&self.table);
            batch
                .into_iter()
                .zip(results)
                .map(|((id, ch, _), partial)| {
                    channels.insert(id, ch);
                    let input_complete = table
                        .streams
                        .get(&id)
                        .is_some_and(|e| e.status == StreamStatus::Draining && e.queue.is_empty());
                    StepOutput {
                        stream: id,
                        partial,
                        input_complete,
                    }
                })
                .collect()
        }
    }

    /// Current best hypothesis of an unfinished stream.
    pub fn partial(&self, stream: StreamId) -> Result<Option<Hypothesis>, StreamError> {
        let _serial = lock(&self.step_lock);
        let channels = lock(&self.channels);
        match channels.get(&stream) {
            Some(ch) => Ok(partial(ch)?),
            None => Err(self.missing(stream)),
        }
    }

    /// Emits the final hypothesis of a drained stream and releases its
    /// channel. The stream is closed even when no frame was decoded.
    pub fn finish_stream(&self, stream: StreamId) -> Result<Hypothesis, StreamError> {
        let _serial = lock(&self.step_lock);
        let mut table = lock(&self.table);
        let entry = table
            .streams
            .get_mut(&stream)
            .ok_or(StreamError::UnknownStream(stream))?;
        match entry.status {
            StreamStatus::Closed => return Err(StreamError::Closed(stream)),
            _ if !entry.queue.is_empty() => return Err(StreamError::PendingChunks(stream)),
            StreamStatus::Open => return Err(StreamError::NotDraining(stream)),
            StreamStatus::Draining => {}
        }
        entry.status = StreamStatus::Closed;
        table.live -= 1;
        let channel = lock(&self.channels)
            .remove(&stream)
            .expect("draining stream owns a channel");
        Ok(channel.best_path()?)
    }

    fn missing(&self, stream: StreamId) -> StreamError {
        match lock(&self.table).streams.get(&stream) {
            Some(_) => StreamError::Closed(stream),
            None => StreamError::UnknownStream(stream),
        }
    }
}

fn partial(ch: &DecodeState) -> Result<Option<Hypothesis>, DecodeError> {
    if ch.frames_decoded() == 0 {
        return Ok(None);
    }
    ch.best_path().map(Some)
}
