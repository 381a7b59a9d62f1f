//! `eval` and `scape`: objective metrics and scape plots for a set of pieces.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use rawmuse_core::metrics::ngram::NGramModel;
use rawmuse_core::metrics::pnsr::{band_histogram, PnsrBand};
use rawmuse_core::metrics::scape::{compile_plots, ScapePlot};
use rawmuse_core::metrics::{aggregate, evaluate_piece, scape_for_notes, write_report_csv, EvalConfig, MetricRegistry, MetricReport, PieceInput};
use rawmuse_core::{decode, NoteList, TokenSequence};

use crate::data::load_ngram_models;
use crate::inputs::{file_stem, load_pieces, Piece};

pub const DEFAULT_METRICS: [&str; 4] = ["si", "cpvr", "cpi", "pnsr"];

fn prompt_notes(p: &Piece) -> Option<NoteList> {
    p.prompt_len.map(|n| decode(&TokenSequence::new(p.tokens.ids()[..n].to_vec()).expect("prefix of a valid sequence")))
}

fn write_plot(plot: &ScapePlot, dir: &Path, stem: &str) -> Result<()> {
    let png = dir.join(format!("{stem}.png"));
    plot.write_png(BufWriter::new(File::create(&png).with_context(|| format!("creating {}", png.display()))?))?;
    plot.write_csv(BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?))?;
    Ok(())
}

/// Scape plots for every piece plus the compiled plot; returns how many
/// pieces failed.
fn scape_dir(pieces: &[Piece], dir: &Path, cfg: &EvalConfig) -> Result<usize> {
    std::fs::create_dir_all(dir)?;
    let plots: Vec<(String, Result<ScapePlot>)> = pieces
        .par_iter()
        .map(|p| (p.id.clone(), scape_for_notes(&p.notes, cfg.si_frame_ms, &cfg.ssm).map_err(anyhow::Error::from)))
        .collect();
    let mut ok = Vec::new();
    let mut failed = 0;
    for (id, plot) in plots {
        match plot {
            Ok(plot) => {
                write_plot(&plot, dir, &file_stem(&id))?;
                ok.push(plot);
            }
            Err(e) => {
                log::warn!("no scape plot for {id}: {e}");
                failed += 1;
            }
        }
    }
    if !ok.is_empty() {
        write_plot(&compile_plots(&ok)?, dir, "compiled")?;
    }
    Ok(failed)
}

/// Means per prompt length, in Table-1 row order.
pub fn per_prompt_means(reports: &[MetricReport]) -> Vec<MetricReport> {
    let mut groups: BTreeMap<Option<usize>, Vec<MetricReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.prompt_len).or_default().push(r.clone());
    }
    groups
        .values()
        .filter_map(|g| aggregate(g, "mean"))
        .collect()
}

pub struct EvalOptions<'a> {
    pub metrics: &'a [String],
    pub ngram_dir: Option<&'a Path>,
    pub scape: bool,
}

pub fn eval(input: &Path, out: &Path, cfg: &EvalConfig, opts: &EvalOptions<'_>) -> Result<()> {
    let registry = MetricRegistry::standard();
    let names: Vec<&str> = opts.metrics.iter().map(String::as_str).collect();
    let metrics = registry.select(&names)?;
    let ngram_models: BTreeMap<usize, NGramModel> = if metrics.iter().any(|m| m.needs_ngram_models()) {
        let Some(dir) = opts.ngram_dir else {
            bail!(
                "CPVR needs corpus n-gram models: build them with `rawmuse ngram-build <training corpus> --out <dir>` \
                 and pass --ngram <dir>, or leave cpvr out of --metrics"
            );
        };
        load_ngram_models(dir, &cfg.ngram_orders)?
    } else {
        BTreeMap::new()
    };

    let (pieces, mut skipped) = load_pieces(input)?;
    if pieces.is_empty() {
        log::warn!("no pieces to evaluate in {}", input.display());
    }
    let results: Vec<(String, Result<MetricReport>)> = pieces
        .par_iter()
        .map(|p| {
            let prompt = prompt_notes(p);
            let piece = PieceInput {
                notes: &p.notes,
                prompt: prompt.as_ref(),
                ngram_models: &ngram_models,
            };
            let r = evaluate_piece(&p.id, p.prompt_len, &piece, &metrics, cfg).map_err(anyhow::Error::from);
            (p.id.clone(), r)
        })
        .collect();
    let mut reports = Vec::new();
    let mut warnings = 0;
    for (id, r) in results {
        match r {
            Ok(r) => {
                warnings += r.warnings.len();
                reports.push(r);
            }
            Err(e) => skipped.push(id, e),
        }
    }

    std::fs::create_dir_all(out)?;
    write_report_csv(BufWriter::new(File::create(out.join("metrics.csv"))?), &reports)?;
    write_report_csv(BufWriter::new(File::create(out.join("metrics_by_prompt.csv"))?), &per_prompt_means(&reports))?;
    if names.contains(&"pnsr") {
        let hist = band_histogram(reports.iter().filter_map(|r| r.get("pnsr")));
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out.join("pnsr_bands.csv"))?));
        w.write_record(["band", "count"])?;
        for (band, count) in PnsrBand::ALL.iter().zip(hist) {
            w.write_record([band.label().to_string(), count.to_string()])?;
        }
        w.flush()?;
    }
    let scape_failed = if opts.scape {
        scape_dir(&pieces, &out.join("scape"), cfg)?
    } else {
        0
    };
    println!(
        "eval: {} piece(s) scored into {}, {} metric warning(s), {} piece(s) skipped{}",
        reports.len(),
        out.join("metrics.csv").display(),
        warnings,
        skipped.len(),
        if opts.scape { format!(", {scape_failed} scape plot(s) failed") } else { String::new() }
    );
    Ok(())
}

pub fn scape(input: &Path, out: &Path, cfg: &EvalConfig) -> Result<()> {
    let (pieces, skipped) = load_pieces(input)?;
    if pieces.is_empty() {
        log::warn!("no pieces found in {}", input.display());
    }
    let failed = scape_dir(&pieces, out, cfg)?;
    println!(
        "scape: {} plot(s) written to {}, {} piece(s) skipped",
        pieces.len() - failed,
        out.display(),
        skipped.len() + failed
    );
    Ok(())
}
