//! `generate`: continue each prompt piece under the sampling protocol.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use rawmuse_core::corpus::{write_jsonl, TokenRecord};
use rawmuse_core::{decode, write_smf};
use rawmuse_model::checkpoint;
use rawmuse_model::generate::{run_protocol, ProtocolSample};
use rawmuse_model::ProtocolConfig;

use crate::inputs::{file_stem, load_pieces};

/// Samples plus the prompt lengths the piece was too short for.
type PieceRun = (Vec<ProtocolSample>, Vec<usize>);

/// Per-piece seed; pieces are independent of each other's order.
fn piece_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn sample_id(piece: &str, s: &ProtocolSample) -> String {
    format!("{piece}_p{}_s{}", s.prompt_len, s.sample)
}

pub fn generate(checkpoint_path: &Path, prompts: &Path, out: &Path, cfg: &ProtocolConfig, seed: u64) -> Result<()> {
    let file = File::open(checkpoint_path).with_context(|| format!("opening {}", checkpoint_path.display()))?;
    let (model, _) = checkpoint::load(BufReader::new(file)).with_context(|| format!("loading {}", checkpoint_path.display()))?;
    let (pieces, mut skipped) = load_pieces(prompts)?;
    if pieces.is_empty() {
        log::warn!("no prompt pieces found in {}", prompts.display());
    }
    let runs: Vec<(String, Result<PieceRun>)> = pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let r = run_protocol(&model, &p.tokens, cfg, piece_seed(seed, i)).map_err(anyhow::Error::from);
            (p.id.clone(), r)
        })
        .collect();

    std::fs::create_dir_all(out)?;
    let mut records = Vec::new();
    let mut short_prompts = 0;
    for (id, run) in runs {
        let (samples, short) = match run {
            Ok(r) => r,
            Err(e) => {
                skipped.push(id, e);
                continue;
            }
        };
        short_prompts += short.len();
        for s in samples {
            let name = sample_id(&id, &s);
            let midi = out.join(format!("{}.mid", file_stem(&name)));
            std::fs::write(&midi, write_smf(&decode(&s.generation.tokens)))
                .with_context(|| format!("writing {}", midi.display()))?;
            let mut record = TokenRecord::new(name, s.generation.tokens).with_labels();
            record.prompt_len = Some(s.prompt_len);
            records.push(record);
        }
    }
    let jsonl = out.join("generations.jsonl");
    write_jsonl(BufWriter::new(File::create(&jsonl)?), &records)?;
    println!(
        "generate: {} sample(s) written to {}, {} prompt length(s) skipped as too long, {} piece(s) skipped",
        records.len(),
        out.display(),
        short_prompts,
        skipped.len()
    );
    Ok(())
}
