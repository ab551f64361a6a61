//! ARPA back-off language models and their grammar acceptors.

use std::collections::HashMap;
use std::f64::consts::LN_10;

use log::warn;

use crate::wfst::{Arc, StateId, SymbolTable, Wfst, EPSILON};

use super::TopologyError;

pub const SENTENCE_START: &str = "<s>";
pub const SENTENCE_END: &str = "</s>";

#[derive(Clone, Debug, PartialEq)]
pub struct NGram {
    pub words: Vec<String>,
    /// log10 probability of the last word given the others.
    pub logprob: f64,
    /// log10 back-off weight; `None` means 0.
    pub backoff: Option<f64>,
}

/// N-grams grouped by order, kept in file order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ArpaModel {
    orders: Vec<Vec<NGram>>,
    index: HashMap<Vec<String>, (usize, usize)>,
}

impl ArpaModel {
    pub fn new() -> Self {
        ArpaModel::default()
    }

    pub fn order(&self) -> usize {
        self.orders.len()
    }

    pub fn ngrams(&self, order: usize) -> &[NGram] {
        &self.orders[order - 1]
    }

    pub fn get(&self, words: &[String]) -> Option<&NGram> {
        self.index.get(words).map(|&(o, i)| &self.orders[o][i])
    }

    pub fn insert(&mut self, ngram: NGram) {
        let order = ngram.words.len();
        assert!(order >= 1, "n-gram must contain at least one word");
        while self.orders.len() < order {
            self.orders.push(Vec::new());
        }
        if let Some(&(o, i)) = self.index.get(&ngram.words) {
            self.orders[o][i] = ngram;
            return;
        }
        let slot = (order - 1, self.orders[order - 1].len());
        self.index.insert(ngram.words.clone(), slot);
        self.orders[order - 1].push(ngram);
    }

    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut model = ArpaModel::new();
        let mut seen_data = false;
        let mut declared: Vec<usize> = Vec::new();
        let mut section: Option<usize> = None;
        let mut ended = false;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            let err = |msg: String| TopologyError::Parse { line: lineno, msg };
            if line.is_empty() || ended {
                continue;
            }
            if !seen_data {
                if line == "\\data\\" {
                    seen_data = true;
                }
                continue;
            }
            if line == "\\end\\" {
                ended = true;
                continue;
            }
            if line.starts_with('\\') {
                let order = line
                    .strip_prefix('\\')
                    .and_then(|s| s.strip_suffix("-grams:"))
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| err(format!("malformed section header {line:?}")))?;
                if order > declared.len() {
                    return Err(err(format!("section for undeclared order {order}")));
                }
                section = Some(order);
                continue;
            }
            match section {
                None => {
                    let counts = line
                        .strip_prefix("ngram ")
                        .and_then(|s| s.split_once('='))
                        .and_then(|(o, c)| {
                            Some((
                                o.trim().parse::<usize>().ok()?,
                                c.trim().parse::<usize>().ok()?,
                            ))
                        })
                        .ok_or_else(|| err(format!("expected `ngram N=count`, found {line:?}")))?;
                    if counts.0 != declared.len() + 1 {
                        return Err(err(format!("ngram orders out of sequence at {}", counts.0)));
                    }
                    declared.push(counts.1);
                }
                Some(order) => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != order + 1 && fields.len() != order + 2 {
                        return Err(err(format!(
                            "expected {} or {} fields for a {order}-gram, found {}",
                            order + 1,
                            order + 2,
                            fields.len()
                        )));
                    }
                    let logprob = parse_log(fields[0]).map_err(err)?;
                    let words: Vec<String> =
                        fields[1..=order].iter().map(|s| s.to_string()).collect();
                    let backoff = match fields.get(order + 1) {
                        Some(b) => Some(parse_log(b).map_err(err)?),
                        None => None,
                    };
                    model.insert(NGram {
                        words,
                        logprob,
                        backoff,
                    });
                }
            }
        }
        if !seen_data {
            return Err(TopologyError::Parse {
                line: 0,
                msg: "missing \\data\\ section".to_string(),
            });
        }
        if declared.is_empty() {
            return Err(TopologyError::Parse {
                line: 0,
                msg: "no ngram counts declared".to_string(),
            });
        }
        while model.orders.len() < declared.len() {
            model.orders.push(Vec::new());
        }
        for (i, &count) in declared.iter().enumerate() {
            let found = model.orders[i].len();
            if found != count {
                warn!("ARPA declares {count} {}-grams but lists {found}", i + 1);
            }
        }
        Ok(model)
    }
}

fn parse_log(field: &str) -> Result<f64, String> {
    field
        .parse::<f64>()
        .map_err(|_| format!("invalid log10 value {field:?}"))
}

/// A grammar acceptor and the number of n-grams dropped for containing
/// out-of-vocabulary words.
#[derive(Clone, Debug)]
pub struct Grammar {
    pub fst: Wfst,
    pub dropped_ngrams: usize,
}

/// Converts a base-10 log probability into a natural-log cost.
pub fn log10_to_cost(log10: f64) -> f64 {
    -log10 * LN_10
}

/// Back-off n-gram acceptor: one state per history, word arcs weighted by the
/// n-gram cost, `ε` back-off arcs to the longest shorter history, and `</s>`
/// folded into final weights. `<s>` only selects the start history.
pub fn build_g_arpa(model: &ArpaModel, words: &SymbolTable) -> Result<Grammar, TopologyError> {
    if model.order() == 0 {
        return Err(TopologyError::Parse {
            line: 0,
            msg: "language model has no n-grams".to_string(),
        });
    }
    let is_known = |w: &str| w == SENTENCE_START || w == SENTENCE_END || words.label(w).is_some();

    let mut dropped = 0usize;
    let mut kept: Vec<&NGram> = Vec::new();
    for order in 1..=model.order() {
        for ng in model.ngrams(order) {
            if ng.words.iter().all(|w| is_known(w)) {
                kept.push(ng);
            } else {
                dropped += 1;
            }
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} n-grams containing out-of-vocabulary words");
    }

    let mut g = Wfst::new();
    let mut states: HashMap<&[String], StateId> = HashMap::new();
    let unigram_state = g.add_state();
    states.insert(&[], unigram_state);

    // Histories: kept n-grams below the top order that carry a back-off weight,
    // plus every context of a kept n-gram (contexts missing from the file get
    // an implied back-off of 0). Any other n-gram would only own a zero-cost
    // back-off arc, so arcs into it go straight to its longest suffix state.
    let top = model.order();
    for ng in &kept {
        let w = ng.words.as_slice();
        let candidates = [
            (w.len() < top && ng.backoff.is_some()).then_some(w),
            Some(&w[..w.len() - 1]),
        ];
        for h in candidates.into_iter().flatten() {
            if h.last().is_some_and(|x| x == SENTENCE_END) || h.is_empty() {
                continue;
            }
            if h[..h.len() - 1].iter().any(|x| x == SENTENCE_END) {
                continue;
            }
            states.entry(h).or_insert_with(|| g.add_state());
        }
    }

    let longest_state = |mut h: &[String]| -> StateId {
        loop {
            if let Some(&s) = states.get(h) {
                return s;
            }
            h = &h[1..];
        }
    };

    let start_key = [SENTENCE_START.to_string()];
    let start = states
        .get(start_key.as_slice())
        .copied()
        .unwrap_or(unigram_state);
    g.set_start(start);

    for ng in &kept {
        let w = ng.words.as_slice();
        let (history, last) = w.split_at(w.len() - 1);
        let last = &last[0];
        if history.iter().any(|x| x == SENTENCE_END) {
            continue;
        }
        let Some(&src) = states.get(history) else {
            continue;
        };
        let cost = log10_to_cost(ng.logprob);
        if last == SENTENCE_END {
            g.set_final(src, cost);
        } else if last != SENTENCE_START {
            let label = words.label(last).expect("vocabulary checked above");
            let dst = longest_state(w);
            g.add_arc(src, Arc::new(label, label, cost, dst));
        }
    }

    // Back-off arcs, in state order for a stable layout.
    let mut histories: Vec<(&[String], StateId)> = states.iter().map(|(h, &s)| (*h, s)).collect();
    histories.sort_by_key(|&(_, s)| s);
    for (h, s) in histories {
        if h.is_empty() {
            continue;
        }
        let backoff = model.get(h).and_then(|ng| ng.backoff).unwrap_or(0.0);
        let dst = longest_state(&h[1..]);
        g.add_arc(s, Arc::new(EPSILON, EPSILON, log10_to_cost(backoff), dst));
    }

    Ok(Grammar {
        fst: g,
        dropped_ngrams: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfst::{transduce_all, Label};

    const UNIGRAM: &str =
        "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.30102999566 a\n-0.30102999566 b\n0 </s>\n\\end\\\n";

    #[test]
    fn unigram_arc_weight() {
        let words = SymbolTable::from_symbols(["a", "b"]).unwrap();
        let model = ArpaModel::parse(UNIGRAM).unwrap();
        let g = build_g_arpa(&model, &words).unwrap().fst;
        assert_eq!(g.num_states(), 1);
        let w = g.arcs(0)[0].weight.value();
        assert!((w - 0.5f64.ln().abs()).abs() < 1e-9, "{w}");
        assert_eq!(g.final_weight(0).value(), 0.0);
    }

    #[test]
    fn missing_data_section() {
        assert!(ArpaModel::parse("").is_err());
        assert!(ArpaModel::parse("\\1-grams:\n-1 a\n").is_err());
    }

    #[test]
    fn malformed_header_reports_line() {
        let text = "\\data\\\nngram 1=1\n\\1-gramz:\n-1 a\n\\end\\\n";
        match ArpaModel::parse(text) {
            Err(TopologyError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "\\data\\\nngram 1=1\n\\1-grams:\n-1 a b c d\n";
        assert!(matches!(
            ArpaModel::parse(text),
            Err(TopologyError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn oov_ngrams_are_dropped_and_counted() {
        let text = "\\data\\\nngram 1=3\nngram 2=1\n\\1-grams:\n-0.5 a -0.1\n-0.5 <unk>\n-0.5 </s>\n\\2-grams:\n-0.2 a <unk>\n\\end\\\n";
        let words = SymbolTable::from_symbols(["a"]).unwrap();
        let g = build_g_arpa(&ArpaModel::parse(text).unwrap(), &words).unwrap();
        assert_eq!(g.dropped_ngrams, 2);
    }

    #[test]
    fn bigram_backoff_structure() {
        let text = "\\data\\\nngram 1=4\nngram 2=2\n\\1-grams:\n-99 <s> -0.2\n-0.4 a -0.1\n-0.6 b\n-0.5 </s>\n\\2-grams:\n-0.1 <s> a\n-0.3 a </s>\n\\end\\\n";
        let words = SymbolTable::from_symbols(["a", "b"]).unwrap();
        let g = build_g_arpa(&ArpaModel::parse(text).unwrap(), &words)
            .unwrap()
            .fst;
        // unigram, <s>, a
        assert_eq!(g.num_states(), 3);
        let a: Label = 1;
        let b: Label = 2;
        // <s> b </s> = bo(<s>) + p(b) + bo(b)=0 + p(</s>)
        let out = transduce_all(&g, &[b], 1000).unwrap();
        let expect = log10_to_cost(-0.2) + log10_to_cost(-0.6) + log10_to_cost(-0.5);
        assert!((out[0].1.value() - expect).abs() < 1e-12);
        // <s> a </s> = p(a|<s>) + p(</s>|a)
        let out = transduce_all(&g, &[a], 1000).unwrap();
        let expect = log10_to_cost(-0.1) + log10_to_cost(-0.3);
        assert!((out[0].1.value() - expect).abs() < 1e-12);
    }
}
