//! Seeded generators and brute-force oracles shared by integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rawmuse_core::metrics::chords::Chord;
use rawmuse_core::tokenizer::{Token, BOS_ID, EOS_ID, NOTE_BASE, VOCAB_SIZE};
use rawmuse_core::{NoteEvent, NoteList, TokenSequence};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Drops notes whose onset lies within one step of an earlier same-pitch
/// onset, so overlap trimming never leaves a note shorter than a step.
pub fn spaced(notes: impl IntoIterator<Item = NoteEvent>) -> NoteList {
    let mut onsets: Vec<Vec<u64>> = vec![Vec::new(); 128];
    let kept = notes
        .into_iter()
        .filter(|n| {
            let taken = &mut onsets[n.pitch as usize];
            let clash = taken.iter().any(|&o| o.abs_diff(n.onset_ms) < 10);
            if !clash {
                taken.push(n.onset_ms);
            }
            !clash
        })
        .collect();
    NoteList::new(kept)
}

/// At most 200 notes inside 120 s, each at least one 10 ms step long, with
/// velocities that survive quantization (4..=127).
pub fn random_notes(rng: &mut impl Rng) -> NoteList {
    let count = rng.random_range(0..=200);
    let notes: Vec<NoteEvent> = (0..count)
        .map(|_| {
            let onset = rng.random_range(0..119_000u64);
            let dur = rng.random_range(10..=(120_000 - onset).min(8_000));
            NoteEvent::new(
                rng.random_range(0..128),
                rng.random_range(4..=127),
                onset,
                onset + dur,
            )
            .unwrap()
        })
        .collect();
    spaced(notes)
}

/// Per-pitch notes in onset order; same-pitch notes never overlap.
pub fn by_pitch(notes: &NoteList) -> Vec<Vec<NoteEvent>> {
    let mut out = vec![Vec::new(); 128];
    for n in notes.notes() {
        out[n.pitch as usize].push(*n);
    }
    out
}

/// Random event stream wrapped in BOS/EOS.
pub fn random_tokens(rng: &mut impl Rng, max_len: usize) -> TokenSequence {
    let len = rng.random_range(0..=max_len);
    let mut ids = vec![BOS_ID];
    ids.extend((0..len).map(|_| rng.random_range(NOTE_BASE..VOCAB_SIZE as u32)));
    ids.push(EOS_ID);
    TokenSequence::new(ids).unwrap()
}

pub fn random_chords(rng: &mut impl Rng, alphabet: usize, max_len: usize) -> Vec<Chord> {
    let pool: Vec<Chord> = Chord::templates().chain([Chord::NoChord]).take(alphabet).collect();
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| *pool.choose(rng).unwrap()).collect()
}

/// Symmetric SSM with unit diagonal and thresholded-looking entries: the
/// penalty or a dyadic value in [0, 1], so that sums are exact.
pub fn random_ssm(rng: &mut impl Rng, n: usize) -> Array2<f64> {
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        s[[i, i]] = 1.0;
        for j in i + 1..n {
            let v = if rng.random_bool(0.4) {
                -2.0
            } else {
                f64::from(rng.random_range(0..=256u32)) / 256.0
            };
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    s
}

/// Every warping path through segment columns `0..m` starting at `row`.
fn paths_from(row: usize, m: usize, n_rows: usize) -> Vec<Vec<(usize, usize)>> {
    fn extend(path: &mut Vec<(usize, usize)>, m: usize, n_rows: usize, out: &mut Vec<Vec<(usize, usize)>>) {
        let (r, c) = *path.last().unwrap();
        if c == m - 1 {
            out.push(path.clone());
            return;
        }
        for (dr, dc) in [(1, 1), (2, 1), (1, 2)] {
            if r + dr < n_rows && c + dc < m {
                path.push((r + dr, c + dc));
                extend(path, m, n_rows, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut vec![(row, 0)], m, n_rows, &mut out);
    out
}

pub struct OracleFitness {
    pub score: f64,
    pub families: Vec<Vec<Vec<(usize, usize)>>>,
}

/// All maximal-score path families for segment `[start, end]`, by
/// enumerating every family of row-disjoint paths.
pub fn brute_force_families(s: &Array2<f64>, start: usize, end: usize) -> OracleFitness {
    let n = s.nrows();
    let m = end - start + 1;
    let paths: Vec<(Vec<(usize, usize)>, f64)> = (0..n)
        .flat_map(|r| paths_from(r, m, n))
        .map(|p| {
            let score = p.iter().map(|&(r, c)| s[[r, start + c]]).sum();
            (p, score)
        })
        .collect();

    let mut best = f64::NEG_INFINITY;
    let mut winners: Vec<Vec<usize>> = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn recurse(
        paths: &[(Vec<(usize, usize)>, f64)],
        next_row: usize,
        chosen: &mut Vec<usize>,
        best: &mut f64,
        winners: &mut Vec<Vec<usize>>,
    ) {
        let score: f64 = chosen.iter().map(|&i| paths[i].1).sum();
        if score > *best {
            *best = score;
            winners.clear();
        }
        if score == *best {
            winners.push(chosen.clone());
        }
        for (i, (p, _)) in paths.iter().enumerate() {
            if p[0].0 >= next_row {
                chosen.push(i);
                recurse(paths, p.last().unwrap().0 + 1, chosen, best, winners);
                chosen.pop();
            }
        }
    }
    recurse(&paths, 0, &mut chosen, &mut best, &mut winners);
    OracleFitness {
        score: best,
        families: winners
            .into_iter()
            .map(|f| f.into_iter().map(|i| paths[i].0.clone()).collect())
            .collect(),
    }
}

/// Harmonic mean of normalized score and coverage, written out directly.
pub fn oracle_fitness(s: &Array2<f64>, start: usize, end: usize, family: &[Vec<(usize, usize)>]) -> f64 {
    let m = (end - start + 1) as f64;
    let mut score = 0.0;
    let mut cells = 0usize;
    let mut covered = vec![false; s.nrows()];
    for p in family {
        for &(r, c) in p {
            score += s[[r, start + c]];
            cells += 1;
        }
        for row in covered.iter_mut().take(p.last().unwrap().0 + 1).skip(p[0].0) {
            *row = true;
        }
    }
    let coverage = covered.iter().filter(|&&c| c).count() as f64;
    let sn = if cells == 0 { 0.0 } else { ((score - m) / cells as f64).max(0.0) };
    let cn = ((coverage - m) / s.nrows() as f64).max(0.0);
    if sn + cn == 0.0 {
        0.0
    } else {
        (2.0 * sn * cn / (sn + cn)).min(1.0)
    }
}

/// CPVR by scanning the training corpus for every query transition.
pub fn brute_force_cpvr(corpus: &[Vec<Chord>], query: &[Chord], n: usize) -> Option<f64> {
    if query.len() < n + 1 {
        return None;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for q in query.windows(n + 1) {
        let mut joint = 0u64;
        let mut marginal = 0u64;
        for seq in corpus {
            for w in seq.windows(n + 1) {
                if w[..n] == q[..n] {
                    marginal += 1;
                    if w == q {
                        joint += 1;
                    }
                }
            }
        }
        sum += if marginal == 0 { 0.0 } else { joint as f64 / marginal as f64 };
        count += 1;
    }
    Some(sum / count as f64)
}

/// CPI by pairwise comparison of n-gram positions.
pub fn brute_force_cpi(seq: &[Chord], n: usize) -> Option<f64> {
    if seq.len() < n {
        return None;
    }
    let grams: Vec<&[Chord]> = seq.windows(n).collect();
    let distinct = (0..grams.len())
        .filter(|&i| (0..i).all(|j| grams[j] != grams[i]))
        .count();
    Some(distinct as f64 / grams.len() as f64)
}

pub fn note_on(pitch: u8) -> Token {
    Token::NoteOn {
        velocity_bin: 16,
        pitch,
    }
}
