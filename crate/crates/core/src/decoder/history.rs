use crate::wfst::{Label, StateId};

/// Backpointer value marking the root of every chain.
pub const ROOT: u32 = u32::MAX;

/// One surviving token, as copied out after a frame's prune.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    /// Index into the previous layer, or [`ROOT`] in the seed layer.
    pub prev: u32,
    pub state: StateId,
    pub cost: f64,
    labels_start: u32,
    labels_len: u32,
}

/// The records surviving one frame, ordered by state id, plus the output
/// labels each record crossed during that frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Layer {
    records: Vec<Record>,
    labels: Vec<Label>,
}

impl Layer {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Layer {
            records: Vec::with_capacity(n),
            labels: Vec::new(),
        }
    }

    pub(crate) fn push(
        &mut self,
        prev: u32,
        state: StateId,
        cost: f64,
        labels: impl Iterator<Item = Label>,
    ) {
        let start = self.labels.len();
        self.labels.extend(labels);
        self.records.push(Record {
            prev,
            state,
            cost,
            labels_start: start as u32,
            labels_len: (self.labels.len() - start) as u32,
        });
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Output labels crossed by `record` within this layer's frame.
    pub fn labels(&self, record: &Record) -> &[Label] {
        let start = record.labels_start as usize;
        &self.labels[start..start + record.labels_len as usize]
    }
}

/// Per-frame token history. Layer 0 holds the tokens seeded before the first
/// frame; layer `t` holds the survivors of frame `t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameHistory {
    layers: Vec<Layer>,
}

impl FrameHistory {
    pub(crate) fn new(seed: Layer) -> Self {
        FrameHistory { layers: vec![seed] }
    }

    pub(crate) fn push(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn last(&self) -> &Layer {
        self.layers
            .last()
            .expect("history always holds the seed layer")
    }

    /// Number of emitting frames recorded.
    pub fn frames(&self) -> usize {
        self.layers.len() - 1
    }

    /// Output labels along the chain ending at `index` in the last layer, and
    /// the number of emitting steps walked back before reaching the root.
    pub fn backtrack(&self, index: usize) -> (Vec<Label>, usize) {
        let mut pieces: Vec<&[Label]> = Vec::with_capacity(self.layers.len());
        let mut idx = index as u32;
        let mut steps = 0;
        for (depth, layer) in self.layers.iter().enumerate().rev() {
            let record = &layer.records[idx as usize];
            pieces.push(layer.labels(record));
            idx = record.prev;
            if depth > 0 {
                steps += 1;
            }
            if idx == ROOT {
                break;
            }
        }
        let words = pieces.into_iter().rev().flatten().copied().collect();
        (words, steps)
    }
}
