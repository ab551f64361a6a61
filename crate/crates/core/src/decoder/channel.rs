use std::collections::HashMap;
use std::sync::Arc;

use crate::boost::BoostTable;
use crate::logits::LogLikelihoods;
use crate::wfst::{Label, StateId, EPSILON};

use super::history::{FrameHistory, Layer};
use super::prune::{prune, Token, NO_TRAIL};
use super::{DecodeError, DecoderConfig, DecodingGraph, Hypothesis};

/// All mutable decoding state for one utterance or stream.
///
/// The graph is shared; everything else is owned, so a channel can be moved
/// between workers between frames.
#[derive(Clone, Debug)]
pub struct DecodeState {
    graph: Arc<DecodingGraph>,
    config: DecoderConfig,
    boost: Option<Arc<BoostTable>>,
    history: FrameHistory,
    width: Option<usize>,
    scratch: Scratch,
}

// Per-frame working set, reused across frames.
#[derive(Clone, Debug, Default)]
struct Scratch {
    tokens: Vec<Token>,
    index: HashMap<StateId, u32>,
    // (parent, olabel) nodes; a token's trail lists the labels crossed this frame.
    trail: Vec<(u32, Label)>,
    queued: Vec<bool>,
}

impl Scratch {
    fn clear(&mut self) {
        self.tokens.clear();
        self.index.clear();
        self.trail.clear();
    }

    fn extend_trail(&mut self, parent: u32, olabel: Label) -> u32 {
        if olabel == EPSILON {
            return parent;
        }
        self.trail.push((parent, olabel));
        (self.trail.len() - 1) as u32
    }

    fn trail_labels(&self, mut node: u32) -> Vec<Label> {
        let mut labels = Vec::new();
        while node != NO_TRAIL {
            let (parent, label) = self.trail[node as usize];
            labels.push(label);
            node = parent;
        }
        labels.reverse();
        labels
    }
}

impl DecodeState {
    /// Seeds a token at the graph start and expands its epsilon closure.
    pub fn new(graph: Arc<DecodingGraph>, config: DecoderConfig) -> Result<Self, DecodeError> {
        config.validate()?;
        let mut state = DecodeState {
            graph,
            config,
            boost: None,
            history: FrameHistory::default(),
            width: None,
            scratch: Scratch::default(),
        };
        state.seed()?;
        Ok(state)
    }

    fn seed(&mut self) -> Result<(), DecodeError> {
        self.scratch.clear();
        let start = self.graph.start();
        self.insert(Token::new(start, 0.0));
        self.expand_nonemitting(0)?;
        let layer = self.finish_layer();
        self.history = FrameHistory::new(layer);
        Ok(())
    }

    /// Binds a boost table to this channel. Only allowed before the first frame.
    pub fn attach_boost(&mut self, table: Arc<BoostTable>) -> Result<(), DecodeError> {
        if self.frames_decoded() > 0 {
            return Err(DecodeError::BoostAfterStart);
        }
        self.boost = Some(table);
        // Re-seed so epsilon arcs leaving the start see the boost too.
        self.seed()
    }

    pub fn boost(&self) -> Option<&Arc<BoostTable>> {
        self.boost.as_ref()
    }

    pub fn graph(&self) -> &Arc<DecodingGraph> {
        &self.graph
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn frames_decoded(&self) -> usize {
        self.history.frames()
    }

    pub fn history(&self) -> &FrameHistory {
        &self.history
    }

    /// `(state, cost)` of every active token, in state order.
    pub fn active(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.history
            .last()
            .records()
            .iter()
            .map(|r| (r.state, r.cost))
    }

    /// Consumes one frame of log-likelihoods. On error the channel is left
    /// at the previous frame.
    pub fn advance(&mut self, frame: &[f32]) -> Result<(), DecodeError> {
        let width = match self.width {
            Some(w) => w,
            None => {
                let needed = self.graph.max_ilabel() as usize;
                if frame.len() < needed {
                    return Err(DecodeError::LabelOutOfRange {
                        label: self.graph.max_ilabel(),
                        width: frame.len(),
                    });
                }
                frame.len()
            }
        };
        if frame.len() != width {
            return Err(DecodeError::FrameWidth {
                expected: width,
                found: frame.len(),
            });
        }

        self.scratch.clear();
        self.expand_emitting(frame);
        let frame_no = self.frames_decoded() + 1;
        self.expand_nonemitting(frame_no)?;
        let layer = self.finish_layer();
        self.history.push(layer);
        self.width = Some(width);
        Ok(())
    }

    pub fn advance_frames(&mut self, frames: &LogLikelihoods) -> Result<(), DecodeError> {
        frames.frames().try_for_each(|f| self.advance(f))
    }

    fn boost_cost(&self, olabel: Label) -> f64 {
        match &self.boost {
            Some(table) if olabel != EPSILON => table.cost(olabel).unwrap_or(0.0),
            _ => 0.0,
        }
    }

    fn insert(&mut self, token: Token) -> u32 {
        let idx = self.scratch.tokens.len() as u32;
        self.scratch.tokens.push(token);
        self.scratch.index.insert(token.state, idx);
        idx
    }

    fn expand_emitting(&mut self, frame: &[f32]) {
        let graph = Arc::clone(&self.graph);
        let scale = self.config.acoustic_scale;
        let layer = self.history.last();
        // Detach the layer borrow from `self` while tokens are inserted.
        let sources: Vec<(StateId, f64)> =
            layer.records().iter().map(|r| (r.state, r.cost)).collect();
        for (ri, (state, cost)) in sources.into_iter().enumerate() {
            for arc in graph.emitting_arcs(state) {
                let acoustic = -scale * f64::from(frame[arc.ilabel as usize - 1]);
                let mut new_cost = cost + acoustic + arc.weight.value();
                if arc.olabel != EPSILON {
                    new_cost += self.boost_cost(arc.olabel);
                }
                match self.scratch.index.get(&arc.nextstate) {
                    Some(&ti) => {
                        let existing = &self.scratch.tokens[ti as usize];
                        if new_cost < existing.cost {
                            let trail = self.scratch.extend_trail(NO_TRAIL, arc.olabel);
                            self.scratch.tokens[ti as usize] = Token {
                                state: arc.nextstate,
                                cost: new_cost,
                                prev: ri as u32,
                                trail,
                            };
                        }
                    }
                    None => {
                        let trail = self.scratch.extend_trail(NO_TRAIL, arc.olabel);
                        self.insert(Token {
                            state: arc.nextstate,
                            cost: new_cost,
                            prev: ri as u32,
                            trail,
                        });
                    }
                }
            }
        }
    }

    fn expand_nonemitting(&mut self, frame_no: usize) -> Result<(), DecodeError> {
        let graph = Arc::clone(&self.graph);
        let cap = self
            .config
            .max_nonemitting_iters
            .unwrap_or(2 * graph.num_states())
            .max(1);
        let relax = self.config.nonemitting_relax_epsilon;

        let mut queue: Vec<u32> = (0..self.scratch.tokens.len() as u32).collect();
        queue.sort_by_key(|&i| self.scratch.tokens[i as usize].state);
        let mut rounds = 0;
        while !queue.is_empty() {
            if rounds == cap {
                return Err(DecodeError::NonemittingCap { frame: frame_no });
            }
            rounds += 1;
            self.scratch.queued.clear();
            self.scratch.queued.resize(self.scratch.tokens.len(), false);
            let mut next = Vec::new();
            for ti in queue {
                let source = self.scratch.tokens[ti as usize];
                for arc in graph.nonemitting_arcs(source.state) {
                    let new_cost = source.cost + arc.weight.value() + self.boost_cost(arc.olabel);
                    match self.scratch.index.get(&arc.nextstate) {
                        Some(&dj) => {
                            if new_cost < self.scratch.tokens[dj as usize].cost - relax {
                                let trail = self.scratch.extend_trail(source.trail, arc.olabel);
                                self.scratch.tokens[dj as usize] = Token {
                                    state: arc.nextstate,
                                    cost: new_cost,
                                    prev: source.prev,
                                    trail,
                                };
                                if !self.scratch.queued[dj as usize] {
                                    self.scratch.queued[dj as usize] = true;
                                    next.push(dj);
                                }
                            }
                        }
                        None => {
                            let trail = self.scratch.extend_trail(source.trail, arc.olabel);
                            let dj = self.insert(Token {
                                state: arc.nextstate,
                                cost: new_cost,
                                prev: source.prev,
                                trail,
                            });
                            self.scratch.queued.push(true);
                            next.push(dj);
                        }
                    }
                }
            }
            next.sort_by_key(|&i| self.scratch.tokens[i as usize].state);
            queue = next;
        }
        Ok(())
    }

    fn finish_layer(&mut self) -> Layer {
        let tokens = std::mem::take(&mut self.scratch.tokens);
        let survivors = prune(tokens, self.config.beam, self.config.max_active);
        let mut layer = Layer::with_capacity(survivors.len());
        for t in &survivors {
            let labels = self.scratch.trail_labels(t.trail);
            layer.push(t.prev, t.state, t.cost, labels.into_iter());
        }
        // Hand the allocation back for the next frame.
        self.scratch.tokens = survivors;
        self.scratch.tokens.clear();
        layer
    }

    /// Least-cost hypothesis over the active tokens, preferring tokens in
    /// final states. Does not modify the channel.
    pub fn best_path(&self) -> Result<Hypothesis, DecodeError> {
        let frames = self.frames_decoded();
        if frames == 0 {
            return Err(DecodeError::NoFrames);
        }
        let records = self.history.last().records();
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in records.iter().enumerate() {
            let total = r.cost + self.graph.final_cost(r.state);
            if total.is_finite() && best.is_none_or(|(_, c)| total < c) {
                best = Some((i, total));
            }
        }
        if best.is_none() {
            for (i, r) in records.iter().enumerate() {
                if best.is_none_or(|(_, c)| r.cost < c) {
                    best = Some((i, r.cost));
                }
            }
        }
        let (index, total_cost) = best.ok_or(DecodeError::NoFrames)?;
        let (words, steps) = self.history.backtrack(index);
        debug_assert_eq!(steps, frames);
        Ok(Hypothesis {
            words,
            total_cost,
            frame_count: frames,
        })
    }
}
