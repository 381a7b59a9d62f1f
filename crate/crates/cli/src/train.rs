//! `train`: fit a model on a token corpus and write a checkpoint.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use rawmuse_core::corpus::TokenRecord;
use rawmuse_model::checkpoint;
use rawmuse_model::train::{mean_nll, write_log_csv, StepLog};
use rawmuse_model::{Example, Model, ModelConfig, TrainConfig, Trainer};

use crate::inputs::read_corpus;

/// Share of source pieces held out for validation, with a floor of one.
pub const VALIDATION_SHARE: f64 = 0.0001;

/// Source piece of an augmented record: the id without its `_t±k_sF`
/// suffix, so every variant of one piece lands on the same side.
pub fn source_id(id: &str) -> &str {
    let Some((head, stretch)) = id.rsplit_once("_s") else {
        return id;
    };
    let Some((base, shift)) = head.rsplit_once("_t") else {
        return id;
    };
    let numeric_shift = shift.strip_prefix(['+', '-']).is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
    if numeric_shift && stretch.parse::<f64>().is_ok() {
        base
    } else {
        id
    }
}

/// Seeded split into (train, validation) by source piece.
pub fn split(records: &[TokenRecord], seed: u64) -> Result<(Vec<&TokenRecord>, Vec<&TokenRecord>)> {
    let mut sources: Vec<&str> = records.iter().map(|r| source_id(&r.id)).collect();
    sources.sort_unstable();
    sources.dedup();
    if sources.len() < 2 {
        bail!("need at least two source pieces to hold one out for validation");
    }
    let n_val = ((sources.len() as f64 * VALIDATION_SHARE).ceil() as usize).clamp(1, sources.len() - 1);
    sources.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held: Vec<&str> = sources[..n_val].to_vec();
    let (val, train) = records.iter().partition(|r| held.contains(&source_id(&r.id)));
    Ok((train, val))
}

fn examples(records: &[&TokenRecord], structure: bool, max_len: usize) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for r in records {
        let ex = Example::from_sequence(&r.tokens, r.labels.as_ref(), structure)?;
        out.extend(ex.windows(max_len));
    }
    Ok(out)
}

pub fn train(corpus: &Path, out: &Path, model_cfg: &ModelConfig, train_cfg: &TrainConfig, seed: u64, log_every: u64) -> Result<()> {
    model_cfg.validate()?;
    let records = read_corpus(corpus)?;
    let (train_recs, val_recs) = split(&records, seed)?;
    let structure = model_cfg.uses_structure();
    let train_ex = examples(&train_recs, structure, train_cfg.max_len)?;
    let val_ex = examples(&val_recs, structure, train_cfg.max_len)?;
    log::info!(
        "{} training pieces ({} windows), {} validation pieces",
        train_recs.len(),
        train_ex.len(),
        val_recs.len()
    );

    let model = Model::new(model_cfg.clone(), seed)?;
    let mut trainer = Trainer::new(model, &train_ex, train_cfg.clone(), seed)?;
    let mut log: Vec<StepLog> = Vec::with_capacity(train_cfg.total_steps as usize);
    while trainer.step_count() < train_cfg.total_steps {
        let entry = trainer.step()?;
        if log_every > 0 && entry.step % log_every == 0 {
            log::info!("step {} lr {:.3e} loss {:.4}", entry.step, entry.lr, entry.loss);
        }
        log.push(entry);
    }
    let val_nll = if val_ex.is_empty() {
        None
    } else {
        Some(mean_nll(&trainer.model, &val_ex)?)
    };

    std::fs::create_dir_all(out)?;
    let meta = json!({
        "seed": seed,
        "steps": trainer.step_count(),
        "train": train_cfg,
        "train_pieces": train_recs.len(),
        "validation": val_recs.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
        "val_nll": val_nll,
    });
    let ckpt = out.join("model.rmck");
    let file = File::create(&ckpt).with_context(|| format!("creating {}", ckpt.display()))?;
    checkpoint::save(&trainer.model, meta, BufWriter::new(file))?;
    write_log_csv(BufWriter::new(File::create(out.join("train_log.csv"))?), &log)?;
    println!(
        "train: {} step(s), final loss {}, validation NLL {}, checkpoint {}",
        trainer.step_count(),
        log.last().map_or("-".into(), |l| format!("{:.4}", l.loss)),
        val_nll.map_or("-".into(), |v| format!("{v:.4}")),
        ckpt.display()
    );
    Ok(())
}
