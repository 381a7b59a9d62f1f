//! Corpus preparation: tokenize, augment, ngram-build.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use rawmuse_core::augment::AugmentSpec;
use rawmuse_core::corpus::{write_jsonl, TokenRecord};
use rawmuse_core::encode;
use rawmuse_core::metrics::chords::{label_chords, ChordSequence};
use rawmuse_core::metrics::ngram::NGramModel;

use crate::inputs::{load_midi_dir, load_pieces};

fn record(id: String, notes: &rawmuse_core::NoteList, labels: bool) -> TokenRecord {
    let r = TokenRecord::new(id, encode(notes));
    if labels {
        r.with_labels()
    } else {
        r
    }
}

fn write_corpus(out: &Path, records: &[TokenRecord]) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_jsonl(BufWriter::new(file), records)?;
    Ok(())
}

pub fn tokenize(dir: &Path, out: &Path, labels: bool) -> Result<()> {
    let (pieces, skipped) = load_midi_dir(dir)?;
    if pieces.is_empty() {
        log::warn!("no MIDI pieces found under {}", dir.display());
    }
    let records: Vec<TokenRecord> = pieces
        .into_par_iter()
        .map(|(id, notes)| record(id, &notes, labels))
        .collect();
    write_corpus(out, &records)?;
    println!(
        "tokenize: {} record(s) written to {}, {} file(s) skipped",
        records.len(),
        out.display(),
        skipped.len()
    );
    Ok(())
}

pub fn augment(dir: &Path, out: &Path, spec: &AugmentSpec, labels: bool) -> Result<()> {
    let (pieces, mut skipped) = load_midi_dir(dir)?;
    if pieces.is_empty() {
        log::warn!("no MIDI pieces found under {}", dir.display());
    }
    let per_piece: Vec<(String, Result<Vec<TokenRecord>>)> = pieces
        .par_iter()
        .map(|(id, notes)| {
            let variants = spec.variants(notes).map(|vs| {
                vs.iter()
                    .map(|(suffix, n)| record(format!("{id}{suffix}"), n, labels))
                    .collect()
            });
            (id.clone(), variants.map_err(anyhow::Error::from))
        })
        .collect();
    let mut records = Vec::new();
    for (id, r) in per_piece {
        match r {
            Ok(rs) => records.extend(rs),
            Err(e) => skipped.push(id, e),
        }
    }
    write_corpus(out, &records)?;
    println!(
        "augment: {} record(s) from {} variant(s) per piece written to {}, {} file(s) skipped",
        records.len(),
        spec.variant_count(),
        out.display(),
        skipped.len()
    );
    Ok(())
}

pub fn ngram_model_path(dir: &Path, n: usize) -> std::path::PathBuf {
    dir.join(format!("ngram_{n}.json"))
}

pub fn ngram_build(input: &Path, out: &Path, orders: &[usize], window_ms: u64) -> Result<()> {
    let (pieces, mut skipped) = load_pieces(input)?;
    let labeled: Vec<(String, Result<ChordSequence>)> = pieces
        .par_iter()
        .map(|p| (p.id.clone(), label_chords(&p.notes, window_ms).map_err(anyhow::Error::from)))
        .collect();
    let mut corpus = Vec::new();
    for (id, seq) in labeled {
        match seq {
            Ok(s) => corpus.push(s),
            Err(e) => skipped.push(id, e),
        }
    }
    if corpus.is_empty() {
        bail!("no pieces to build n-gram models from in {}", input.display());
    }
    std::fs::create_dir_all(out)?;
    let mut sizes = BTreeMap::new();
    for &n in orders {
        let model = NGramModel::build(&corpus, n)?;
        if model.is_empty() {
            log::warn!("n={n}: no piece is long enough for a single transition");
        }
        let path = ngram_model_path(out, n);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        model.write_json(BufWriter::new(file))?;
        sizes.insert(n, path);
    }
    println!(
        "ngram-build: {} piece(s), orders {:?} written to {}, {} file(s) skipped",
        corpus.len(),
        sizes.keys().collect::<Vec<_>>(),
        out.display(),
        skipped.len()
    );
    Ok(())
}

pub fn load_ngram_models(dir: &Path, orders: &[usize]) -> Result<BTreeMap<usize, NGramModel>> {
    let mut models = BTreeMap::new();
    for &n in orders {
        let path = ngram_model_path(dir, n);
        let file = File::open(&path).with_context(|| {
            format!(
                "missing n-gram model {}; build it with `rawmuse ngram-build <training corpus> --out {}`",
                path.display(),
                dir.display()
            )
        })?;
        let model = NGramModel::read_json(std::io::BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
        if model.n() != n {
            bail!("{} holds an order-{} model", path.display(), model.n());
        }
        models.insert(n, model);
    }
    Ok(models)
}
