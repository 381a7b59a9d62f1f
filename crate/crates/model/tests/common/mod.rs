//! Finite-difference gradient checking shared by the model test targets.
#![allow(dead_code)]

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rawmuse_core::labels::TokenLabels;
use rawmuse_core::{label_sequence, TokenSequence};
use rawmuse_model::loss::next_token_nll;
use rawmuse_model::{Model, ModelConfig, Params};

pub const FD_STEP: f64 = 1e-4;

/// Lower bound on the relative-error denominator. Below it the difference
/// quotient is dominated by rounding in the loss (about 1e-16·|L|/h).
pub const GRAD_FLOOR: f64 = 1e-5;

/// Short note stream with a couple of shifts, so every label table is hit.
pub fn probe_sequence() -> TokenSequence {
    let ids = vec![1, 3 + 128 * 20 + 60, 4099 + 24, 3 + 60, 3 + 128 * 25 + 64, 4099 + 9, 3 + 64, 2];
    TokenSequence::new(ids).unwrap()
}

pub fn probe_labels(seq: &TokenSequence) -> Vec<TokenLabels> {
    label_sequence(seq).to_rows()
}

/// Summed next-token NLL. With `dropout_seed`, masks come from a fresh
/// generator each call so the loss is a deterministic function.
pub fn loss(model: &Model, ids: &[u32], labels: Option<&[TokenLabels]>, dropout_seed: Option<u64>) -> f64 {
    let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let (logits, _) = model
        .forward_train(ids, labels, rng.as_mut().map(|r| r as &mut dyn RngCore))
        .unwrap();
    next_token_nll(&logits, ids).unwrap().total
}

pub fn analytic(model: &Model, ids: &[u32], labels: Option<&[TokenLabels]>, dropout_seed: Option<u64>) -> Params {
    let mut rng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let (logits, cache) = model
        .forward_train(ids, labels, rng.as_mut().map(|r| r as &mut dyn RngCore))
        .unwrap();
    let nll = next_token_nll(&logits, ids).unwrap();
    model.backward(&cache, &nll.d_logits)
}

fn nudge(model: &mut Model, block: &str, index: usize, delta: f64) {
    for (name, mut t) in model.params.tensors_mut() {
        if name == block {
            t.as_slice_mut().expect("standard layout")[index] += delta;
            return;
        }
    }
    panic!("no block {block}");
}

#[derive(Debug, Clone)]
pub struct BlockCheck {
    pub block: String,
    pub checked: usize,
    pub worst_rel: f64,
}

/// Central differences on the `per_block` largest analytic entries of each
/// block plus a few random ones; relative error |a - n| / max(|a|, |n|, GRAD_FLOOR).
pub fn check_gradients(
    model: &Model,
    ids: &[u32],
    labels: Option<&[TokenLabels]>,
    dropout_seed: Option<u64>,
    per_block: usize,
    seed: u64,
) -> Vec<BlockCheck> {
    let grads = analytic(model, ids, labels, dropout_seed);
    let mut probe = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (block, g) in grads.tensors() {
        let flat: Vec<f64> = g.iter().copied().collect();
        let mut order: Vec<usize> = (0..flat.len()).collect();
        order.sort_by(|&a, &b| flat[b].abs().total_cmp(&flat[a].abs()).then(a.cmp(&b)));
        let mut picks: Vec<usize> = order.iter().copied().take(per_block).collect();
        for _ in 0..3 {
            picks.push((rng.next_u64() % flat.len() as u64) as usize);
        }
        let mut worst = 0.0f64;
        for &i in &picks {
            nudge(&mut probe, &block, i, FD_STEP);
            let up = loss(&probe, ids, labels, dropout_seed);
            nudge(&mut probe, &block, i, -2.0 * FD_STEP);
            let down = loss(&probe, ids, labels, dropout_seed);
            nudge(&mut probe, &block, i, FD_STEP);
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = flat[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            worst = worst.max(rel);
        }
        out.push(BlockCheck {
            block,
            checked: picks.len(),
            worst_rel: worst,
        });
    }
    out
}

/// Two layers at width 64 with an 8-position table.
pub fn small_config(variant: &str) -> ModelConfig {
    let mut cfg = ModelConfig::new(variant, 2, 4, 64);
    cfg.n_positions = 16;
    cfg
}

/// Pieces built from a 4-bar motif repeated four times: an eighth-note
/// melody over one triad per bar, at 120 bpm, in a per-piece key.
pub fn structured_corpus(pieces: usize, seed: u64) -> Vec<rawmuse_core::NoteList> {
    use rand::Rng;
    use rawmuse_core::NoteEvent;
    const SCALE: [u8; 7] = [0, 2, 4, 5, 7, 9, 11];
    const PROGRESSION: [[u8; 3]; 4] = [[0, 4, 7], [7, 11, 14], [9, 12, 16], [5, 9, 12]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pieces)
        .map(|_| {
            let key: u8 = rng.random_range(0..12);
            let melody: Vec<u8> = (0..32)
                .map(|_| 60 + key + SCALE[rng.random_range(0..7)] + 12 * rng.random_range(0..2u8))
                .collect();
            let mut notes = Vec::new();
            for rep in 0..4u64 {
                let base = rep * 8_000;
                for (i, &p) in melody.iter().enumerate() {
                    let on = base + i as u64 * 250;
                    notes.push(NoteEvent::new(p, 96, on, on + 240).unwrap());
                }
                for (bar, triad) in PROGRESSION.iter().enumerate() {
                    let on = base + bar as u64 * 2_000;
                    for &t in triad {
                        notes.push(NoteEvent::new(48 + key + t, 64, on, on + 1_990).unwrap());
                    }
                }
            }
            rawmuse_core::NoteList::new(notes)
        })
        .collect()
}
