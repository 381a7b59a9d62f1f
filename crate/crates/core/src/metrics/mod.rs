//! Objective metrics: structureness (SI) from fitness scape plots, chord
//! progression rationality (CPVR) and irregularity (CPI), and the
//! non-silence ratio of prompts (PNSR).
//!
//! Per-piece metrics implement [`PieceMetric`] and are looked up by name in a
//! [`MetricRegistry`]; a report is the concatenation of the selected
//! metrics' columns.

pub mod chords;
pub mod chroma;
pub mod fitness;
pub mod ngram;
pub mod pnsr;
pub mod scape;
pub mod ssm;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::midi::{to_piano_roll, NoteList};
use chords::label_chords;
use chroma::chroma;
use ngram::NGramModel;
use scape::{scape_plot, si, ScapePlot};
use ssm::{ssm, SsmParams};

/// Column order of the objective results table, followed by PNSR.
pub const TABLE_COLUMNS: [&str; 9] = [
    "si_3_8", "si_8_15", "si_15_N", "cpvr_2", "cpvr_3", "cpvr_4", "cpi_2", "cpi_3", "cpi_4",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Frame size for SI (1 Hz).
    pub si_frame_ms: u64,
    pub chord_window_ms: u64,
    pub ngram_orders: Vec<usize>,
    pub ssm: SsmParams,
    pub pnsr_frame_ms: u64,
    pub cpvr_smoothing: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            si_frame_ms: 1000,
            chord_window_ms: 1000,
            ngram_orders: vec![2, 3, 4],
            ssm: SsmParams::default(),
            pnsr_frame_ms: 10,
            cpvr_smoothing: 0.0,
        }
    }
}

/// Everything a metric may need about one piece.
pub struct PieceInput<'a> {
    pub notes: &'a NoteList,
    /// The prompt the piece was continued from, when known.
    pub prompt: Option<&'a NoteList>,
    pub ngram_models: &'a BTreeMap<usize, NGramModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue {
    pub column: String,
    pub value: f64,
    pub warning: Option<String>,
}

impl MetricValue {
    fn new(column: impl Into<String>, value: f64, warning: Option<String>) -> Self {
        Self {
            column: column.into(),
            value,
            warning,
        }
    }
}

pub trait PieceMetric: Send + Sync {
    fn name(&self) -> &'static str;
    fn columns(&self, cfg: &EvalConfig) -> Vec<String>;
    fn evaluate(&self, input: &PieceInput<'_>, cfg: &EvalConfig) -> Result<Vec<MetricValue>>;
    fn needs_ngram_models(&self) -> bool {
        false
    }
}

/// Scape plot of a note list at the given frame size.
pub fn scape_for_notes(notes: &NoteList, frame_ms: u64, params: &SsmParams) -> Result<ScapePlot> {
    let c = chroma(notes, frame_ms)?;
    scape_plot(&ssm(&c, params), frame_ms)
}

pub struct StructurenessMetric;

pub const SI_BANDS: [(&str, f64, f64); 3] = [
    ("si_3_8", 3.0, 8.0),
    ("si_8_15", 8.0, 15.0),
    ("si_15_N", 15.0, f64::INFINITY),
];

impl PieceMetric for StructurenessMetric {
    fn name(&self) -> &'static str {
        "si"
    }

    fn columns(&self, _cfg: &EvalConfig) -> Vec<String> {
        SI_BANDS.iter().map(|b| b.0.to_string()).collect()
    }

    fn evaluate(&self, input: &PieceInput<'_>, cfg: &EvalConfig) -> Result<Vec<MetricValue>> {
        let plot = scape_for_notes(input.notes, cfg.si_frame_ms, &cfg.ssm)?;
        SI_BANDS
            .iter()
            .map(|&(col, lo, hi)| {
                let v = si(&plot, lo, hi)?;
                let warn = v
                    .out_of_range
                    .then(|| format!("{col}: band starts beyond piece length"));
                Ok(MetricValue::new(col, v.value, warn))
            })
            .collect()
    }
}

pub struct CpvrMetric;

impl PieceMetric for CpvrMetric {
    fn name(&self) -> &'static str {
        "cpvr"
    }

    fn columns(&self, cfg: &EvalConfig) -> Vec<String> {
        cfg.ngram_orders.iter().map(|n| format!("cpvr_{n}")).collect()
    }

    fn needs_ngram_models(&self) -> bool {
        true
    }

    fn evaluate(&self, input: &PieceInput<'_>, cfg: &EvalConfig) -> Result<Vec<MetricValue>> {
        let chords = label_chords(input.notes, cfg.chord_window_ms)?;
        cfg.ngram_orders
            .iter()
            .map(|&n| {
                let model = input.ngram_models.get(&n).ok_or_else(|| {
                    Error::Argument(format!("no {n}-gram chord model loaded for CPVR"))
                })?;
                let v = ngram::cpvr(&chords, model, n, cfg.cpvr_smoothing)?;
                let warn = v.degenerate.then(|| format!("cpvr_{n}: too few chords"));
                Ok(MetricValue::new(format!("cpvr_{n}"), v.value, warn))
            })
            .collect()
    }
}

pub struct CpiMetric;

impl PieceMetric for CpiMetric {
    fn name(&self) -> &'static str {
        "cpi"
    }

    fn columns(&self, cfg: &EvalConfig) -> Vec<String> {
        cfg.ngram_orders.iter().map(|n| format!("cpi_{n}")).collect()
    }

    fn evaluate(&self, input: &PieceInput<'_>, cfg: &EvalConfig) -> Result<Vec<MetricValue>> {
        let chords = label_chords(input.notes, cfg.chord_window_ms)?;
        cfg.ngram_orders
            .iter()
            .map(|&n| {
                let v = ngram::cpi(&chords, n)?;
                let warn = v.degenerate.then(|| format!("cpi_{n}: too few chords"));
                Ok(MetricValue::new(format!("cpi_{n}"), v.value, warn))
            })
            .collect()
    }
}

/// PNSR of the prompt when known, otherwise of the whole piece.
pub struct PnsrMetric;

impl PieceMetric for PnsrMetric {
    fn name(&self) -> &'static str {
        "pnsr"
    }

    fn columns(&self, _cfg: &EvalConfig) -> Vec<String> {
        vec!["pnsr".into()]
    }

    fn evaluate(&self, input: &PieceInput<'_>, cfg: &EvalConfig) -> Result<Vec<MetricValue>> {
        let notes = input.prompt.unwrap_or(input.notes);
        let roll = to_piano_roll(notes, cfg.pnsr_frame_ms)?;
        Ok(vec![match pnsr::pnsr(&roll) {
            Ok(v) => MetricValue::new("pnsr", v, None),
            Err(_) => MetricValue::new("pnsr", 0.0, Some("pnsr: empty piano roll".into())),
        }])
    }
}

pub struct MetricRegistry {
    metrics: Vec<Box<dyn PieceMetric>>,
}

impl Default for MetricRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl MetricRegistry {
    pub fn empty() -> Self {
        Self {
            metrics: Vec::new(),
        }
    }

    /// si, cpvr, cpi and pnsr, in report column order.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(StructurenessMetric));
        r.register(Box::new(CpvrMetric));
        r.register(Box::new(CpiMetric));
        r.register(Box::new(PnsrMetric));
        r
    }

    /// Replaces any metric already registered under the same name.
    pub fn register(&mut self, metric: Box<dyn PieceMetric>) {
        if let Some(slot) = self.metrics.iter_mut().find(|m| m.name() == metric.name()) {
            *slot = metric;
        } else {
            self.metrics.push(metric);
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn PieceMetric> {
        self.metrics.iter().find(|m| m.name() == name).map(|m| m.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.metrics.iter().map(|m| m.name()).collect()
    }

    /// Metrics by name, in registry order regardless of request order.
    pub fn select(&self, names: &[&str]) -> Result<Vec<&dyn PieceMetric>> {
        for n in names {
            if self.get(n).is_none() {
                return Err(Error::Argument(format!(
                    "unknown metric {n:?}; available: {}",
                    self.names().join(", ")
                )));
            }
        }
        Ok(self
            .metrics
            .iter()
            .filter(|m| names.contains(&m.name()))
            .map(|m| m.as_ref())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub id: String,
    pub prompt_len: Option<usize>,
    pub values: Vec<(String, f64)>,
    pub warnings: Vec<String>,
}

impl MetricReport {
    pub fn get(&self, column: &str) -> Option<f64> {
        self.values.iter().find(|(c, _)| c == column).map(|(_, v)| *v)
    }
}

pub fn evaluate_piece(
    id: &str,
    prompt_len: Option<usize>,
    input: &PieceInput<'_>,
    metrics: &[&dyn PieceMetric],
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    let mut values = Vec::new();
    let mut warnings = Vec::new();
    for m in metrics {
        for v in m.evaluate(input, cfg)? {
            if let Some(w) = v.warning {
                warnings.push(w);
            }
            values.push((v.column, v.value));
        }
    }
    Ok(MetricReport {
        id: id.to_string(),
        prompt_len,
        values,
        warnings,
    })
}

/// Column means over reports that share one column layout.
pub fn aggregate(reports: &[MetricReport], id: &str) -> Option<MetricReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let values = first
        .values
        .iter()
        .enumerate()
        .map(|(i, (col, _))| {
            let sum: f64 = reports.iter().map(|r| r.values[i].1).sum();
            (col.clone(), sum / n)
        })
        .collect();
    let prompt_len = reports
        .iter()
        .all(|r| r.prompt_len == first.prompt_len)
        .then_some(first.prompt_len)
        .flatten();
    Some(MetricReport {
        id: id.to_string(),
        prompt_len,
        values,
        warnings: Vec::new(),
    })
}

/// One row per piece plus an aggregate row named `mean`.
pub fn write_report_csv<W: Write>(out: W, reports: &[MetricReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = reports.first() else {
        w.write_record(["piece", "prompt"])?;
        w.flush()?;
        return Ok(());
    };
    let mut header = vec!["piece".to_string(), "prompt".to_string()];
    header.extend(first.values.iter().map(|(c, _)| c.clone()));
    w.write_record(&header)?;
    let mean = aggregate(reports, "mean").expect("non-empty");
    for r in reports.iter().chain(std::iter::once(&mean)) {
        let mut row = vec![
            r.id.clone(),
            r.prompt_len.map(|p| p.to_string()).unwrap_or_default(),
        ];
        row.extend(r.values.iter().map(|(_, v)| format!("{v:.6}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
