//! Chord n-gram transition statistics and the two chord-progression metrics.
//!
//! Successive n-grams overlap by n-1 chords, so a transition is a window of
//! n+1 chords read as (first n, last n).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::chords::{Chord, ChordSequence};
use crate::error::{arg_err, Error, Result};

pub type Gram = Vec<Chord>;

pub const NGRAM_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramModel {
    n: usize,
    counts: BTreeMap<Gram, BTreeMap<Gram, u64>>,
    marginals: BTreeMap<Gram, u64>,
}

fn check_order(n: usize) -> Result<()> {
    if !(2..=4).contains(&n) {
        return arg_err(format!("n-gram order must be 2, 3 or 4, got {n}"));
    }
    Ok(())
}

/// (previous n-gram, current n-gram) pairs of a sequence.
pub fn transitions(chords: &[Chord], n: usize) -> impl Iterator<Item = (&[Chord], &[Chord])> {
    chords.windows(n + 1).map(move |w| (&w[..n], &w[1..]))
}

impl NGramModel {
    pub fn build(corpus: &[ChordSequence], n: usize) -> Result<Self> {
        check_order(n)?;
        if corpus.is_empty() {
            return arg_err("n-gram corpus is empty");
        }
        let mut model = NGramModel {
            n,
            counts: BTreeMap::new(),
            marginals: BTreeMap::new(),
        };
        for seq in corpus {
            for (prev, cur) in transitions(&seq.chords, n) {
                *model
                    .counts
                    .entry(prev.to_vec())
                    .or_default()
                    .entry(cur.to_vec())
                    .or_default() += 1;
                *model.marginals.entry(prev.to_vec()).or_default() += 1;
            }
        }
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    pub fn count(&self, prev: &[Chord], cur: &[Chord]) -> u64 {
        self.counts
            .get(prev)
            .and_then(|m| m.get(cur))
            .copied()
            .unwrap_or(0)
    }

    /// How often `prev` was followed by anything.
    pub fn marginal(&self, prev: &[Chord]) -> u64 {
        self.marginals.get(prev).copied().unwrap_or(0)
    }

    fn successors(&self, prev: &[Chord]) -> usize {
        self.counts.get(prev).map_or(0, BTreeMap::len)
    }

    /// Conditional frequency of `cur` after `prev`. With `smoothing > 0`,
    /// add-α over the observed successors plus one unseen slot.
    pub fn probability(&self, prev: &[Chord], cur: &[Chord], smoothing: f64) -> f64 {
        let marginal = self.marginal(prev) as f64;
        let count = self.count(prev, cur) as f64;
        if smoothing > 0.0 {
            let slots = (self.successors(prev) + 1) as f64;
            (count + smoothing) / (marginal + smoothing * slots)
        } else if marginal > 0.0 {
            count / marginal
        } else {
            0.0
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let file = NGramFile {
            version: NGRAM_FORMAT_VERSION,
            n: self.n,
            transitions: self
                .counts
                .iter()
                .flat_map(|(prev, m)| {
                    m.iter().map(move |(cur, &count)| TransitionEntry {
                        prev: prev.clone(),
                        cur: cur.clone(),
                        count,
                    })
                })
                .collect(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let file: NGramFile = serde_json::from_reader(input)?;
        if file.version != NGRAM_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "n-gram model version {} (expected {NGRAM_FORMAT_VERSION})",
                file.version
            )));
        }
        check_order(file.n)?;
        let mut model = NGramModel {
            n: file.n,
            counts: BTreeMap::new(),
            marginals: BTreeMap::new(),
        };
        for t in file.transitions {
            if t.prev.len() != file.n || t.cur.len() != file.n || t.prev[1..] != t.cur[..file.n - 1] {
                return arg_err("n-gram transition entries do not overlap by n-1 chords");
            }
            *model.marginals.entry(t.prev.clone()).or_default() += t.count;
            *model.counts.entry(t.prev).or_default().entry(t.cur).or_default() += t.count;
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct TransitionEntry {
    prev: Gram,
    cur: Gram,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct NGramFile {
    version: u32,
    n: usize,
    transitions: Vec<TransitionEntry>,
}

/// A metric value that may carry a degenerate-input warning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub degenerate: bool,
}

/// Mean conditional frequency of each transition of `chords` under `model`.
pub fn cpvr(chords: &ChordSequence, model: &NGramModel, n: usize, smoothing: f64) -> Result<Scored> {
    if model.n != n {
        return arg_err(format!("CPVR requested for n={n} but model has n={}", model.n));
    }
    if chords.len() < n + 1 {
        log::warn!("CPVR_{n}: {} chords is too short", chords.len());
        return Ok(Scored {
            value: 0.0,
            degenerate: true,
        });
    }
    let (sum, count) = transitions(&chords.chords, n)
        .map(|(prev, cur)| model.probability(prev, cur, smoothing))
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    Ok(Scored {
        value: sum / count as f64,
        degenerate: false,
    })
}

/// Share of distinct n-grams among all n-gram positions.
pub fn cpi(chords: &ChordSequence, n: usize) -> Result<Scored> {
    if n == 0 {
        return arg_err("CPI needs n >= 1");
    }
    if chords.len() < n {
        log::warn!("CPI_{n}: {} chords is too short", chords.len());
        return Ok(Scored {
            value: 0.0,
            degenerate: true,
        });
    }
    let grams: Vec<&[Chord]> = chords.chords.windows(n).collect();
    let distinct: BTreeSet<&[Chord]> = grams.iter().copied().collect();
    Ok(Scored {
        value: distinct.len() as f64 / grams.len() as f64,
        degenerate: false,
    })
}
