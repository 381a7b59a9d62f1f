//! Autoregressive top-k sampling with structural labels produced step by
//! step from the generated prefix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rawmuse_core::labels::{LabelerState, DEFAULT_HORIZON_MS};
use rawmuse_core::tokenizer::{Token, BOS_ID, EOS_ID, PAD_ID, SHIFT_STEP_MS};
use rawmuse_core::TokenSequence;

use crate::error::{arg_err, Result};
use crate::transformer::{KvCache, Model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub k: usize,
    pub temperature: f64,
    /// Sampling stops before a shift would move the clock past this.
    pub horizon_ms: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            k: 32,
            temperature: 1.0,
            horizon_ms: DEFAULT_HORIZON_MS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Eos,
    Horizon,
    Length,
}

/// What one sampling step chose among how many candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub token: u32,
    /// 0 for the most probable candidate.
    pub rank: usize,
    pub support: usize,
    /// Sum of the renormalized candidate probabilities.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    /// Prompt followed by sampled tokens, terminated by EOS.
    pub tokens: TokenSequence,
    pub prompt_len: usize,
    pub trace: Vec<StepTrace>,
    pub stop: StopReason,
    pub clock_ms: u64,
}

/// Candidate ids, most probable first; PAD and BOS are never candidates.
/// Ties are broken toward the lower id.
pub fn top_k(logits: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..logits.len())
        .filter(|&i| i != PAD_ID as usize && i != BOS_ID as usize)
        .collect();
    let k = k.min(idx.len());
    let cmp = |a: &usize, b: &usize| logits[*b].total_cmp(&logits[*a]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

/// Draw one candidate from the temperature-scaled softmax over `candidates`.
pub fn sample_top_k(logits: &[f64], k: usize, temperature: f64, rng: &mut impl Rng) -> StepTrace {
    let cand = top_k(logits, k);
    let max = logits[cand[0]];
    let weights: Vec<f64> = cand
        .iter()
        .map(|&i| ((logits[i] - max) / temperature).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut rank = cand.len() - 1;
    for (r, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            rank = r;
            break;
        }
    }
    StepTrace {
        token: cand[rank] as u32,
        rank,
        support: cand.len(),
        mass: probs.iter().sum(),
    }
}

pub fn generate(model: &Model, prompt: &TokenSequence, cfg: &GenerateConfig, seed: u64) -> Result<Generation> {
    if prompt.is_empty() {
        return arg_err("prompt must contain at least one token");
    }
    let n_positions = model.config.n_positions;
    if prompt.len() > n_positions {
        return arg_err(format!(
            "prompt of {} tokens exceeds {n_positions} positions",
            prompt.len()
        ));
    }
    if cfg.k == 0 {
        return arg_err("k must be at least 1");
    }
    if cfg.temperature.is_nan() || cfg.temperature <= 0.0 {
        return arg_err("temperature must be positive");
    }
    let structure = model.config.uses_structure();
    let mut labeler = LabelerState::new(cfg.horizon_ms)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = model.kv_cache();
    let mut out: Vec<u32> = Vec::with_capacity(n_positions + 1);
    let mut trace = Vec::new();

    let feed = |id: u32, cache: &mut KvCache, labeler: &mut LabelerState| -> Result<Vec<f64>> {
        let labels = labeler.step(id)?;
        let logits = model.step(cache, id, structure.then_some(labels))?;
        Ok(logits.to_vec())
    };

    let mut logits = Vec::new();
    for &id in prompt.ids() {
        if id == EOS_ID {
            return arg_err("prompt contains EOS");
        }
        logits = feed(id, &mut cache, &mut labeler)?;
        out.push(id);
    }
    let stop = loop {
        if labeler.clock_ms() > cfg.horizon_ms {
            break StopReason::Horizon;
        }
        if out.len() >= n_positions {
            break StopReason::Length;
        }
        let step = sample_top_k(&logits, cfg.k, cfg.temperature, &mut rng);
        let id = step.token;
        if id == EOS_ID {
            trace.push(step);
            break StopReason::Eos;
        }
        if let Token::Shift(s) = Token::from_id(id)? {
            if labeler.clock_ms() + u64::from(s) * SHIFT_STEP_MS > cfg.horizon_ms {
                break StopReason::Horizon;
            }
        }
        trace.push(step);
        out.push(id);
        if out.len() < n_positions {
            logits = feed(id, &mut cache, &mut labeler)?;
        } else {
            labeler.step(id)?;
        }
    };
    out.push(EOS_ID);
    Ok(Generation {
        tokens: TokenSequence::new(out)?,
        prompt_len: prompt.len(),
        trace,
        stop,
        clock_ms: labeler.clock_ms(),
    })
}

/// Prompts of 2^l tokens taken from the beginning of a piece, each
/// continued `samples` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub prompt_exponents: Vec<u32>,
    pub samples: usize,
    pub generate: GenerateConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            prompt_exponents: vec![4, 6, 8],
            samples: 5,
            generate: GenerateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSample {
    pub prompt_len: usize,
    pub sample: usize,
    pub generation: Generation,
}

/// Seed of one (prompt length, sample) cell, independent of run order.
pub fn sample_seed(seed: u64, prompt_len: usize, sample: usize) -> u64 {
    seed ^ ((prompt_len as u64) << 32) ^ sample as u64
}

/// All samples for one piece. Prompt lengths the piece is too short for
/// are skipped with a warning and reported in the second value.
pub fn run_protocol(
    model: &Model,
    piece: &TokenSequence,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<(Vec<ProtocolSample>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    // the piece's own EOS is not part of any prompt
    let body = piece.ids().iter().take_while(|&&id| id != EOS_ID).count();
    for &l in &cfg.prompt_exponents {
        let prompt_len = 1usize << l;
        if prompt_len > body {
            log::warn!("piece has {body} tokens before EOS; skipping {prompt_len}-token prompt");
            skipped.push(prompt_len);
            continue;
        }
        let prompt = piece.prefix(prompt_len);
        for sample in 0..cfg.samples {
            let generation = generate(model, &prompt, &cfg.generate, sample_seed(seed, prompt_len, sample))?;
            out.push(ProtocolSample {
                prompt_len,
                sample,
                generation,
            });
        }
    }
    Ok((out, skipped))
}
