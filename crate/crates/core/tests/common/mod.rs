//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::LN_10;
use std::sync::Arc;

use ctc_wfst::boost::BoostTable;
use ctc_wfst::decoder::DecodingGraph;
use ctc_wfst::decoder::{decode_utterance, DecoderConfig};
use ctc_wfst::logits::LogLikelihoods;
use ctc_wfst::topology::{
    build_g_arpa, build_l, build_l_with, build_t, build_tlg, ArpaModel, LexiconEntry,
    OlabelPlacement, Topology, UnitInventory,
};
use ctc_wfst::wfst::{Label, SymbolTable, Wfst, EPSILON};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
struct Cell {
    cost: f64,
    words: Vec<Label>,
}

fn relax(cells: &mut [Option<Cell>], from: usize, to: usize, add: f64, olabel: Label) -> bool {
    let Some(src) = &cells[from] else {
        return false;
    };
    let cost = src.cost + add;
    if cells[to].as_ref().is_some_and(|c| c.cost <= cost) {
        return false;
    }
    let mut words = src.words.clone();
    if olabel != EPSILON {
        words.push(olabel);
    }
    cells[to] = Some(Cell { cost, words });
    true
}

fn boost_of(boost: Option<&BoostTable>, olabel: Label) -> f64 {
    match boost {
        Some(b) if olabel != EPSILON => b.cost(olabel).unwrap_or(0.0),
        _ => 0.0,
    }
}

/// Bellman-Ford over the epsilon-input arcs.
fn epsilon_closure(fst: &Wfst, cells: &mut [Option<Cell>], boost: Option<&BoostTable>) {
    for _ in 0..=fst.num_states() {
        let mut changed = false;
        for s in fst.states() {
            for arc in fst.arcs(s) {
                if arc.ilabel == EPSILON {
                    let add = arc.weight.value() + boost_of(boost, arc.olabel);
                    changed |= relax(cells, s as usize, arc.nextstate as usize, add, arc.olabel);
                }
            }
        }
        if !changed {
            return;
        }
    }
    panic!("negative epsilon cycle in oracle graph");
}

/// Exact Viterbi over (frame x state), independent of the decoder.
/// Returns the best word sequence and its cost, preferring final states.
pub fn viterbi(
    fst: &Wfst,
    frames: &LogLikelihoods,
    scale: f64,
    boost: Option<&BoostTable>,
) -> Option<(Vec<Label>, f64)> {
    let n = fst.num_states();
    let mut cells: Vec<Option<Cell>> = vec![None; n];
    cells[fst.start()? as usize] = Some(Cell {
        cost: 0.0,
        words: Vec::new(),
    });
    epsilon_closure(fst, &mut cells, boost);
    for frame in frames.frames() {
        let mut next: Vec<Option<Cell>> = vec![None; n];
        for s in fst.states() {
            let Some(src) = &cells[s as usize] else {
                continue;
            };
            for arc in fst.arcs(s) {
                if arc.ilabel == EPSILON {
                    continue;
                }
                let cost = src.cost + arc.weight.value() + boost_of(boost, arc.olabel)
                    - scale * f64::from(frame[arc.ilabel as usize - 1]);
                let t = arc.nextstate as usize;
                if next[t].as_ref().is_none_or(|c| cost < c.cost) {
                    let mut words = src.words.clone();
                    if arc.olabel != EPSILON {
                        words.push(arc.olabel);
                    }
                    next[t] = Some(Cell { cost, words });
                }
            }
        }
        epsilon_closure(fst, &mut next, boost);
        cells = next;
    }
    let pick = |with_final: bool| {
        let mut best: Option<(Vec<Label>, f64)> = None;
        for s in fst.states() {
            let Some(c) = &cells[s as usize] else {
                continue;
            };
            let total = if with_final {
                c.cost + fst.final_weight(s).value()
            } else {
                c.cost
            };
            if total.is_finite() && best.as_ref().is_none_or(|b| total < b.1) {
                best = Some((c.words.clone(), total));
            }
        }
        best
    };
    pick(true).or_else(|| pick(false))
}

/// Relative closeness used for cost comparisons.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Log-softmax rows of uniformly random logits.
pub fn random_frames(
    rng: &mut impl Rng,
    frames: usize,
    width: usize,
    spread: f64,
) -> LogLikelihoods {
    let rows: Vec<Vec<f32>> = (0..frames)
        .map(|_| {
            let logits: Vec<f64> = (0..width)
                .map(|_| rng.random_range(-spread..spread))
                .collect();
            log_softmax(&logits)
        })
        .collect();
    LogLikelihoods::from_rows(&rows).unwrap()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f32> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|v| (v - z) as f32).collect()
}

/// Frames whose arg-max token follows `tokens`; other tokens sit around
/// `-floor`.
pub fn peaked_frames(
    rng: &mut impl Rng,
    tokens: &[usize],
    width: usize,
    floor: f64,
) -> LogLikelihoods {
    let rows: Vec<Vec<f32>> = tokens
        .iter()
        .map(|&k| {
            let logits: Vec<f64> = (0..width)
                .map(|j| {
                    if j == k {
                        0.0
                    } else {
                        -floor + rng.random_range(-2.0..2.0)
                    }
                })
                .collect();
            log_softmax(&logits)
        })
        .collect();
    LogLikelihoods::from_rows(&rows).unwrap()
}

/// Back-off n-gram model kept in plain maps, with its own scorer.
#[derive(Clone, Debug, Default)]
pub struct ToyLm {
    pub order: usize,
    /// n-gram (including `<s>`/`</s>`) to (log10 prob, log10 backoff).
    pub ngrams: BTreeMap<Vec<String>, (f64, f64)>,
}

impl ToyLm {
    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\\data\\\n");
        for n in 1..=self.order {
            let count = self.ngrams.keys().filter(|k| k.len() == n).count();
            out += &format!("ngram {n}={count}\n");
        }
        for n in 1..=self.order {
            out += &format!("\n\\{n}-grams:\n");
            for (k, &(p, bo)) in self.ngrams.iter().filter(|(k, _)| k.len() == n) {
                if n < self.order {
                    out += &format!("{p:.17}\t{}\t{bo:.17}\n", k.join(" "));
                } else {
                    out += &format!("{p:.17}\t{}\n", k.join(" "));
                }
            }
        }
        out + "\n\\end\\\n"
    }

    /// log10 P(word | history) by the back-off recursion.
    pub fn log10_prob(&self, history: &[String], word: &str) -> f64 {
        let mut key: Vec<String> = history.to_vec();
        key.push(word.to_string());
        if let Some(&(p, _)) = self.ngrams.get(&key) {
            return p;
        }
        if history.is_empty() {
            return f64::NEG_INFINITY;
        }
        let bo = self.ngrams.get(history).map_or(0.0, |&(_, bo)| bo);
        bo + self.log10_prob(&history[1..], word)
    }

    /// -ln P(<s> words </s>).
    pub fn sentence_cost(&self, words: &[&str]) -> f64 {
        let mut seq: Vec<String> = vec!["<s>".into()];
        seq.extend(words.iter().map(|w| w.to_string()));
        seq.push("</s>".into());
        let mut log10 = 0.0;
        for i in 1..seq.len() {
            let lo = i.saturating_sub(self.order - 1);
            log10 += self.log10_prob(&seq[lo..i], &seq[i]);
        }
        -log10 * LN_10
    }

    /// Random model in which every explicit n-gram beats its backed-off
    /// estimate and every back-off weight is non-negative (log10). A longer
    /// context then never has a worse future than its suffix, so the
    /// tropical graph score equals the ARPA score.
    pub fn random(rng: &mut impl Rng, words: &[String], order: usize, density: f64) -> ToyLm {
        let mut lm = ToyLm {
            order,
            ngrams: BTreeMap::new(),
        };
        let mut vocab: Vec<String> = words.to_vec();
        vocab.push("</s>".into());
        let mut raw: Vec<f64> = vocab.iter().map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|v| *v /= total);
        for (w, p) in vocab.iter().zip(&raw) {
            lm.ngrams
                .insert(vec![w.clone()], (p.log10(), rng.random_range(0.0..0.15)));
        }
        lm.ngrams
            .insert(vec!["<s>".into()], (-99.0, rng.random_range(0.0..0.15)));

        let mut contexts: Vec<Vec<String>> = std::iter::once(vec!["<s>".to_string()])
            .chain(words.iter().map(|w| vec![w.clone()]))
            .collect();
        for _ in 2..=order {
            let mut next_contexts = Vec::new();
            for h in &contexts {
                for w in &vocab {
                    if !rng.random_bool(density) {
                        continue;
                    }
                    let backed = lm.log10_prob(h, w);
                    let p = (backed + rng.random_range(0.05..0.6))
                        .min(-0.01)
                        .max(backed);
                    let bo = rng.random_range(0.0..0.15);
                    let mut key = h.clone();
                    key.push(w.clone());
                    lm.ngrams.insert(key.clone(), (p, bo));
                    if w != "</s>" {
                        next_contexts.push(key);
                    }
                }
            }
            contexts = next_contexts;
        }
        lm
    }
}

pub struct ToySystem {
    pub seed: u64,
    pub inv: UnitInventory,
    pub words: SymbolTable,
    pub lexicon: Vec<LexiconEntry>,
    pub lm: ToyLm,
    pub topology: Topology,
    pub t: Wfst,
    pub l: Wfst,
    pub g: Wfst,
    pub tlg: Wfst,
    pub graph: Arc<DecodingGraph>,
}

impl ToySystem {
    pub fn num_tokens(&self) -> usize {
        self.inv.num_tokens()
    }

    pub fn word_labels(&self) -> Vec<Label> {
        self.lexicon
            .iter()
            .map(|e| self.words.label(&e.word).unwrap())
            .collect()
    }

    /// Unit indices spelling `words`.
    pub fn spell(&self, words: &[Label]) -> Vec<usize> {
        words
            .iter()
            .flat_map(|&w| {
                let name = self.words.symbol(w).unwrap();
                self.lexicon
                    .iter()
                    .find(|e| e.word == name)
                    .unwrap()
                    .pronunciation
                    .clone()
            })
            .collect()
    }
}

const UNIT_NAMES: [&str; 5] = ["a", "b", "c", "d", "e"];

/// Random system with at most 5 tokens, at most 10 words, a unigram or
/// bigram model and at most `max_states` TLG states.
pub fn toy_system(seed: u64, max_states: usize) -> ToySystem {
    for attempt in 0.. {
        let mut r = rng(seed.wrapping_mul(1_000_003).wrapping_add(attempt));
        if let Some(sys) = try_toy_system(&mut r, seed, max_states) {
            return sys;
        }
    }
    unreachable!()
}

fn try_toy_system(r: &mut ChaCha8Rng, seed: u64, max_states: usize) -> Option<ToySystem> {
    let nonblank = r.random_range(2..=4);
    let mut symbols = vec!["<blk>"];
    symbols.extend(&UNIT_NAMES[..nonblank]);
    let inv = UnitInventory::from_symbols(&symbols, 0).unwrap();

    let n_words = r.random_range(2..=10);
    let mut prons: Vec<Vec<usize>> = Vec::new();
    while prons.len() < n_words {
        let len = r.random_range(1..=3);
        let p: Vec<usize> = (0..len).map(|_| r.random_range(1..=nonblank)).collect();
        if !prons.contains(&p) {
            prons.push(p);
        }
    }
    let names: Vec<String> = prons
        .iter()
        .map(|p| p.iter().map(|&u| UNIT_NAMES[u - 1]).collect::<String>())
        .collect();
    let words = SymbolTable::from_symbols(&names).unwrap();
    let lexicon: Vec<LexiconEntry> = names
        .iter()
        .zip(&prons)
        .map(|(n, p)| LexiconEntry::new(n.clone(), p.clone()))
        .collect();

    let order = r.random_range(1..=2);
    let lm = ToyLm::random(r, &names, order, 0.4);
    let model = ArpaModel::parse(&lm.to_arpa()).unwrap();
    let topology = if r.random_bool(0.5) {
        Topology::Normal
    } else {
        Topology::Compact
    };

    let t = build_t(&inv, topology);
    let l = build_l(&lexicon, &inv, &words).unwrap();
    let g = build_g_arpa(&model, &words).unwrap().fst;
    let tlg = build_tlg(&t, &l, &g).ok()?;
    if tlg.num_states() > max_states {
        return None;
    }
    let graph = Arc::new(DecodingGraph::new(tlg.clone()).unwrap());
    Some(ToySystem {
        seed,
        inv,
        words,
        lexicon,
        lm,
        topology,
        t,
        l,
        g,
        tlg,
        graph,
    })
}

/// Random word sequence of the system.
pub fn random_words(r: &mut impl Rng, sys: &ToySystem, max_len: usize) -> Vec<Label> {
    let labels = sys.word_labels();
    let n = r.random_range(1..=max_len);
    (0..n).map(|_| *labels.choose(r).unwrap()).collect()
}

/// One frame per unit with 1..=3 blank frames around each; repeated units
/// never sit on adjacent frames.
pub fn ctc_realization(r: &mut impl Rng, units: &[usize], blank: usize) -> Vec<usize> {
    let mut tokens = Vec::new();
    for &u in units {
        for _ in 0..r.random_range(1..=3) {
            tokens.push(blank);
        }
        tokens.push(u);
    }
    for _ in 0..r.random_range(1..=3) {
        tokens.push(blank);
    }
    tokens
}

/// One-state acceptor with a self-loop per word, weighted by its boost.
pub fn boost_acceptor(words: &SymbolTable, table: &BoostTable) -> Wfst {
    let mut b = Wfst::new();
    let s = b.add_state();
    b.set_start(s);
    b.set_final(s, 0.0);
    for (w, _) in words.iter().filter(|&(w, _)| w != EPSILON) {
        let weight = table.cost(w).unwrap_or(0.0);
        b.add_arc(s, ctc_wfst::wfst::Arc::new(w, w, weight, s));
    }
    b
}

/// Random table over a random subset of the words.
pub fn random_boost(r: &mut impl Rng, labels: &[Label], max_magnitude: f64) -> BoostTable {
    let mut table = BoostTable::new();
    for &w in labels {
        if r.random_bool(0.4) {
            table.boost(w, r.random_range(0.1..max_magnitude)).unwrap();
        }
    }
    table
}

pub fn count_by_label(words: &[Label]) -> HashMap<Label, usize> {
    let mut m = HashMap::new();
    for &w in words {
        *m.entry(w).or_default() += 1;
    }
    m
}

/// Units blank, a, b, c; words "ab" = [a, b] and "cb" = [c, b].
pub fn two_word_system(placement: OlabelPlacement) -> (Arc<DecodingGraph>, SymbolTable) {
    let inv = UnitInventory::from_symbols(&["<blk>", "a", "b", "c"], 0).unwrap();
    let words = SymbolTable::from_symbols(["ab", "cb"]).unwrap();
    let lexicon = vec![
        LexiconEntry::new("ab", vec![1, 2]),
        LexiconEntry::new("cb", vec![3, 2]),
    ];
    let arpa = "\\data\\\nngram 1=4\n\n\\1-grams:\n-99\t<s>\t0\n-0.4771\tab\t0\n-0.4771\tcb\t0\n-0.4771\t</s>\t0\n\n\\end\\\n";
    let g = build_g_arpa(&ArpaModel::parse(arpa).unwrap(), &words)
        .unwrap()
        .fst;
    let t = build_t(&inv, Topology::Normal);
    let l = build_l_with(&lexicon, &inv, &words, placement).unwrap();
    let tlg = build_tlg(&t, &l, &g).unwrap();
    (Arc::new(DecodingGraph::new(tlg).unwrap()), words)
}

/// Boosting one short word by about the beam width makes it fire on
/// every frame where it is not hopeless.
/// Returns how often the boosted word appears without and with the boost.
pub fn degeneration_case() -> (usize, usize) {
    let inv = UnitInventory::from_symbols(&["<blk>", "k", "a", "t"], 0).unwrap();
    let words = SymbolTable::from_symbols(["cat", "k"]).unwrap();
    let lexicon = vec![
        LexiconEntry::new("cat", vec![1, 2, 3]),
        LexiconEntry::new("k", vec![1]),
    ];
    let arpa = "\\data\\\nngram 1=4\n\n\\1-grams:\n-99\t<s>\t0\n-0.3\tcat\t0\n-1.0\tk\t0\n-0.3\t</s>\t0\n\n\\end\\\n";
    let g = build_g_arpa(&ArpaModel::parse(arpa).unwrap(), &words)
        .unwrap()
        .fst;
    let tlg = build_tlg(
        &build_t(&inv, Topology::Normal),
        &build_l_with(&lexicon, &inv, &words, OlabelPlacement::First).unwrap(),
        &g,
    )
    .unwrap();
    let graph = Arc::new(DecodingGraph::new(tlg).unwrap());
    let mut r = rng(1);
    // "k a t" with blanks: the reference is a single "cat".
    let tokens = [0, 1, 0, 0, 2, 0, 0, 3, 0, 0, 0, 0];
    let frames = peaked_frames(&mut r, &tokens, 4, 6.0);
    let config = DecoderConfig::default();
    let plain = decode_utterance(&graph, &config, None, &frames).unwrap();
    let k = words.label("k").unwrap();
    let mut table = BoostTable::new();
    table.boost(k, config.beam).unwrap();
    let boosted = decode_utterance(&graph, &config, Some(&Arc::new(table)), &frames).unwrap();
    let count = |w: &[u32]| w.iter().filter(|&&x| x == k).count();
    (count(&plain.words), count(&boosted.words))
}

/// Smallest beam at which the left-pushed two-word graph recovers a boosted
/// word that the right-pushed graph loses.
pub fn separating_beam() -> Option<f64> {
    // Frame 0 favors c over a by 6 nats; a boost of 10 makes "ab" the exact winner.
    let frames = ctc_wfst::logits::LogLikelihoods::from_rows(&[
        log_softmax(&[-8.0, -6.0, -8.0, 0.0]),
        log_softmax(&[-8.0, -8.0, 0.0, -8.0]),
    ])
    .unwrap();
    let mut found = None;
    for beam in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 12.0, 17.0] {
        let outcome = |placement| {
            let (graph, words) = two_word_system(placement);
            let mut table = BoostTable::new();
            table.boost(words.label("ab").unwrap(), 10.0).unwrap();
            let config = DecoderConfig {
                beam,
                ..DecoderConfig::default()
            };
            decode_utterance(&graph, &config, Some(&Arc::new(table)), &frames)
                .unwrap()
                .text(&words)
        };
        let left = outcome(OlabelPlacement::First);
        let right = outcome(OlabelPlacement::Last);
        if left == "ab" && right != "ab" {
            found = Some(beam);
            break;
        }
    }
    found
}

/// Outcome of boosting words that cannot appear on any reading of the
/// reference unit sequence.
pub struct NeutralityRun {
    pub boosted_words: usize,
    pub plain: Vec<Label>,
    pub boosted: Vec<Label>,
}

/// Returns `None` when every lexicon word occurs in some segmentation of the
/// reference.
pub fn neutrality_run(sys: &ToySystem, seed: u64, max_magnitude: f64) -> Option<NeutralityRun> {
    let mut r = rng(seed);
    let reference = random_words(&mut r, sys, 4);
    let units = sys.spell(&reference);
    let unit_labels: Vec<Label> = units.iter().map(|&u| UnitInventory::label_of(u)).collect();
    let mut reachable: Vec<Label> = ctc_wfst::wfst::transduce_all(&sys.l, &unit_labels, 10_000_000)
        .unwrap()
        .into_iter()
        .flat_map(|(o, _)| o)
        .collect();
    reachable.sort_unstable();
    reachable.dedup();
    let absent: Vec<Label> = sys
        .word_labels()
        .into_iter()
        .filter(|w| reachable.binary_search(w).is_err())
        .collect();
    if absent.is_empty() {
        return None;
    }
    let mut table = BoostTable::new();
    for &w in &absent {
        table.boost(w, r.random_range(0.5..=max_magnitude)).unwrap();
    }
    let tokens = ctc_realization(&mut r, &units, sys.inv.blank());
    let frames = peaked_frames(&mut r, &tokens, sys.num_tokens(), 25.0);
    let config = DecoderConfig::default();
    let plain = decode_utterance(&sys.graph, &config, None, &frames)
        .unwrap()
        .words;
    let boosted = decode_utterance(&sys.graph, &config, Some(&Arc::new(table)), &frames)
        .unwrap()
        .words;
    Some(NeutralityRun {
        boosted_words: absent.len(),
        plain,
        boosted,
    })
}

/// Feeds `utts` through a stream pool in chunks of `chunk_frames`, visiting
/// streams in an order drawn from `order_seed`, and returns the finished
/// hypotheses in input order.
pub fn stream_decode(
    graph: &Arc<DecodingGraph>,
    utts: &[LogLikelihoods],
    boosts: &[Option<Arc<BoostTable>>],
    chunk_frames: usize,
    order_seed: u64,
    workers: usize,
    max_batch: usize,
) -> Vec<ctc_wfst::decoder::Hypothesis> {
    use ctc_wfst::streaming::{BatcherConfig, Chunk, PoolConfig, StreamPool};

    let pool = StreamPool::new(
        graph.clone(),
        PoolConfig {
            decoder: DecoderConfig::default(),
            batcher: BatcherConfig {
                max_batch,
                max_wait: std::time::Duration::ZERO,
            },
            max_streams: utts.len(),
            workers,
        },
    )
    .unwrap();
    let ids: Vec<_> = boosts
        .iter()
        .map(|b| pool.create_stream(b.clone()).unwrap())
        .collect();
    let mut queues: Vec<std::collections::VecDeque<LogLikelihoods>> =
        utts.iter().map(|u| u.chunks(chunk_frames).into()).collect();
    let mut r = rng(order_seed);
    let mut open: Vec<usize> = (0..utts.len()).collect();
    while !open.is_empty() {
        let pick = r.random_range(0..open.len());
        let i = open[pick];
        let frames = queues[i].pop_front().unwrap();
        let is_last = queues[i].is_empty();
        pool.push_chunk(Chunk {
            stream: ids[i],
            frames,
            is_last,
        })
        .unwrap();
        if is_last {
            open.swap_remove(pick);
        }
        if r.random_bool(0.3) {
            pool.step();
        }
    }
    while !pool.step().is_empty() {}
    ids.iter()
        .map(|&id| pool.finish_stream(id).unwrap())
        .collect()
}
