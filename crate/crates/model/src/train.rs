//! Next-token training: seeded batching, per-sequence gradients computed in
//! parallel and summed in a fixed order, AdamW updates on a linear schedule.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rawmuse_core::labels::{label_sequence, StructuralLabels, TokenLabels};
use rawmuse_core::TokenSequence;

use crate::error::{arg_err, Result};
use crate::loss::next_token_nll;
use crate::optim::{AdamW, AdamWConfig, LinearSchedule};
use crate::params::Params;
use crate::transformer::Model;

/// One training window: token ids plus aligned labels when the model
/// uses structural embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub ids: Vec<u32>,
    pub labels: Option<Vec<TokenLabels>>,
}

impl Example {
    /// Labels come from `labels` when given, otherwise from the sequence
    /// itself; they are dropped when `structure` is false.
    pub fn from_sequence(seq: &TokenSequence, labels: Option<&StructuralLabels>, structure: bool) -> Result<Self> {
        let labels = if structure {
            let rows = match labels {
                Some(l) => l.to_rows(),
                None => label_sequence(seq).to_rows(),
            };
            if rows.len() != seq.len() {
                return arg_err(format!("{} labels for {} tokens", rows.len(), seq.len()));
            }
            Some(rows)
        } else {
            None
        };
        Ok(Self {
            ids: seq.ids().to_vec(),
            labels,
        })
    }

    /// Consecutive windows of at most `max_len` tokens; windows shorter
    /// than 2 tokens are dropped.
    pub fn windows(&self, max_len: usize) -> Vec<Example> {
        let max_len = max_len.max(2);
        (0..self.ids.len())
            .step_by(max_len)
            .map(|start| {
                let end = (start + max_len).min(self.ids.len());
                Example {
                    ids: self.ids[start..end].to_vec(),
                    labels: self.labels.as_ref().map(|l| l[start..end].to_vec()),
                }
            })
            .filter(|e| e.ids.len() >= 2)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub peak_lr: f64,
    pub warmup_steps: u64,
    pub total_steps: u64,
    pub batch_size: usize,
    /// Longer sequences are split into windows of this many tokens.
    pub max_len: usize,
    pub adamw: AdamWConfig,
    /// Rescale gradients whose global norm exceeds this.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            peak_lr: 1e-4,
            warmup_steps: 1000,
            total_steps: 10_000,
            batch_size: 8,
            max_len: 1024,
            adamw: AdamWConfig::default(),
            grad_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> LinearSchedule {
        LinearSchedule {
            peak: self.peak_lr,
            warmup: self.warmup_steps,
            total: self.total_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: u64,
    pub lr: f64,
    pub loss: f64,
}

pub fn write_log_csv<W: Write>(out: W, log: &[StepLog]) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "step,lr,loss")?;
    for l in log {
        writeln!(out, "{},{:e},{:.6}", l.step, l.lr, l.loss)?;
    }
    out.flush()?;
    Ok(())
}

fn example_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Summed NLL, target count and summed gradient over `batch`. Each
/// sequence's dropout draws come from its own stream of `seed`.
pub fn batch_gradient(model: &Model, batch: &[&Example], seed: u64, stream_base: u64) -> Result<(f64, usize, Params)> {
    let mut total = 0.0;
    let mut count = 0;
    let mut grad = model.params.zeros_like();
    let width = rayon::current_num_threads().max(1);
    for (c, chunk) in batch.chunks(width).enumerate() {
        let parts: Vec<Result<(f64, usize, Params)>> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, ex)| {
                let mut rng = example_rng(seed, stream_base + (c * width + i) as u64);
                let (logits, cache) = model.forward_train(&ex.ids, ex.labels.as_deref(), Some(&mut rng))?;
                let nll = next_token_nll(&logits, &ex.ids)?;
                Ok((nll.total, nll.count, model.backward(&cache, &nll.d_logits)))
            })
            .collect();
        for part in parts {
            let (t, n, g) = part?;
            total += t;
            count += n;
            grad.add_assign(&g);
        }
    }
    Ok((total, count, grad))
}

/// Token-level mean NLL of `examples` without dropout.
pub fn mean_nll(model: &Model, examples: &[Example]) -> Result<f64> {
    let parts: Vec<Result<(f64, usize)>> = examples
        .par_iter()
        .map(|ex| {
            let logits = model.forward(&ex.ids, ex.labels.as_deref())?;
            let nll = next_token_nll(&logits, &ex.ids)?;
            Ok((nll.total, nll.count))
        })
        .collect();
    let (mut total, mut count) = (0.0, 0);
    for p in parts {
        let (t, n) = p?;
        total += t;
        count += n;
    }
    if count == 0 {
        return arg_err("no targets to evaluate");
    }
    Ok(total / count as f64)
}

pub struct Trainer {
    pub model: Model,
    pub config: TrainConfig,
    optimizer: AdamW,
    examples: Vec<Example>,
    order: Vec<usize>,
    cursor: usize,
    shuffle_rng: ChaCha8Rng,
    seed: u64,
}

impl Trainer {
    pub fn new(model: Model, examples: &[Example], config: TrainConfig, seed: u64) -> Result<Self> {
        if config.batch_size == 0 {
            return arg_err("batch_size must be at least 1");
        }
        if config.max_len > model.config.n_positions {
            return arg_err(format!(
                "max_len {} exceeds the model's {} positions",
                config.max_len, model.config.n_positions
            ));
        }
        let structure = model.config.uses_structure();
        let mut windows = Vec::new();
        for ex in examples {
            if structure && ex.labels.is_none() {
                return arg_err("structural variant needs labeled examples");
            }
            windows.extend(ex.windows(config.max_len));
        }
        if windows.is_empty() {
            return arg_err("training corpus is empty");
        }
        let optimizer = AdamW::new(config.adamw, &model.params);
        Ok(Self {
            model,
            config,
            optimizer,
            order: (0..windows.len()).collect(),
            examples: windows,
            cursor: usize::MAX,
            shuffle_rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.optimizer.steps()
    }

    pub fn windows(&self) -> &[Example] {
        &self.examples
    }

    fn next_batch(&mut self) -> Vec<usize> {
        let mut batch = Vec::with_capacity(self.config.batch_size);
        while batch.len() < self.config.batch_size.min(self.examples.len()) {
            if self.cursor >= self.order.len() {
                self.order.shuffle(&mut self.shuffle_rng);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }

    /// One optimizer update; the reported loss is the batch mean before it.
    pub fn step(&mut self) -> Result<StepLog> {
        let idx = self.next_batch();
        let batch: Vec<&Example> = idx.iter().map(|&i| &self.examples[i]).collect();
        let step = self.optimizer.steps() + 1;
        let stream = step * self.config.batch_size as u64;
        let (total, count, mut grad) = batch_gradient(&self.model, &batch, self.seed, stream)?;
        grad.scale(1.0 / count as f64);
        if let Some(clip) = self.config.grad_clip {
            let norm = grad.global_norm();
            if norm > clip {
                grad.scale(clip / norm);
            }
        }
        let lr = self.config.schedule().lr(step);
        self.optimizer.update(&mut self.model.params, &grad, lr);
        Ok(StepLog {
            step,
            lr,
            loss: total / count as f64,
        })
    }

    /// Runs until `total_steps` or until `stop` returns true.
    pub fn run(&mut self, mut stop: impl FnMut(&StepLog) -> bool) -> Result<Vec<StepLog>> {
        let mut log = Vec::new();
        while self.optimizer.steps() < self.config.total_steps {
            let entry = self.step()?;
            log::debug!("step {} lr {:e} loss {:.4}", entry.step, entry.lr, entry.loss);
            log.push(entry);
            if stop(&entry) {
                break;
            }
        }
        Ok(log)
    }
}
