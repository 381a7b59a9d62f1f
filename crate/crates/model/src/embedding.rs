//! Token, structural and positional lookup tables, their initializers, and
//! the concat-project-plus-positional input pipeline.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayViewMut1, Axis};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use rawmuse_core::labels::{TokenLabels, PART_CLASSES, PC_CLASSES, TIME_CLASSES, TYPE_CLASSES};
use rawmuse_core::tokenizer::VOCAB_SIZE;

use crate::error::{arg_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub d_token: usize,
    /// Width of each of the four structural tables.
    pub d_struct: usize,
    pub w_part: f64,
    pub w_time: f64,
    /// Standard deviation of the truncated-normal initializer.
    pub init_std: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self::for_width(256)
    }
}

impl EmbeddingConfig {
    pub fn for_width(d_hidden: usize) -> Self {
        Self {
            d_token: d_hidden,
            d_struct: (d_hidden / 4).max(1),
            w_part: 10.0,
            w_time: 1.0,
            init_std: 0.02,
        }
    }

    /// Width of the concatenated token and structural rows.
    pub fn concat_width(&self) -> usize {
        self.d_token + 4 * self.d_struct
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_token == 0 || self.d_struct == 0 {
            return arg_err("embedding widths must be at least 1");
        }
        if self.w_part == self.w_time {
            return arg_err("w_part and w_time must differ");
        }
        if !(self.w_part > 0.0 && self.w_time > 0.0) {
            return arg_err("sinusoidal scale factors must be positive");
        }
        if self.init_std.is_nan() || self.init_std <= 0.0 {
            return arg_err("init_std must be positive");
        }
        Ok(())
    }
}

/// The four structural tables, in labeler order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructTable {
    Part,
    Type,
    Time,
    Pc,
}

impl StructTable {
    pub const ALL: [StructTable; 4] = [StructTable::Part, StructTable::Type, StructTable::Time, StructTable::Pc];

    pub fn rows(self) -> usize {
        match self {
            StructTable::Part => PART_CLASSES,
            StructTable::Type => TYPE_CLASSES,
            StructTable::Time => TIME_CLASSES,
            StructTable::Pc => PC_CLASSES,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StructTable::Part => "part",
            StructTable::Type => "type",
            StructTable::Time => "time",
            StructTable::Pc => "pc",
        }
    }

    fn label(self, l: &TokenLabels) -> usize {
        usize::from(match self {
            StructTable::Part => l.part,
            StructTable::Type => l.kind,
            StructTable::Time => l.time,
            StructTable::Pc => l.pc,
        })
    }
}

/// Fills a lookup table in place. `param` is the initializer's single
/// hyperparameter (a standard deviation or a scale factor).
pub trait TableInitializer: Send + Sync {
    fn name(&self) -> &'static str;
    fn fill(&self, table: &mut Array2<f64>, param: f64, rng: &mut dyn rand::RngCore) -> Result<()>;
}

/// N(0, std²) resampled until inside ±2·std.
pub struct TruncatedNormal;

impl TableInitializer for TruncatedNormal {
    fn name(&self) -> &'static str {
        "truncated-normal"
    }

    fn fill(&self, table: &mut Array2<f64>, std: f64, rng: &mut dyn rand::RngCore) -> Result<()> {
        if std.is_nan() || std <= 0.0 {
            return arg_err(format!("truncated normal needs std > 0, got {std}"));
        }
        let normal = Normal::new(0.0, std).expect("std is positive and finite");
        for v in table.iter_mut() {
            *v = loop {
                let x: f64 = normal.sample(rng);
                if x.abs() <= 2.0 * std {
                    break x;
                }
            };
        }
        Ok(())
    }
}

/// Row k, column 2i: sin(k / (10000/w)^(2i/d)); column 2i+1: the cosine.
pub struct Sinusoidal;

impl TableInitializer for Sinusoidal {
    fn name(&self) -> &'static str {
        "sinusoidal"
    }

    fn fill(&self, table: &mut Array2<f64>, w: f64, _rng: &mut dyn rand::RngCore) -> Result<()> {
        let d = table.ncols();
        if !d.is_multiple_of(2) {
            return arg_err(format!("sinusoidal table width must be even, got {d}"));
        }
        if w.is_nan() || w <= 0.0 {
            return arg_err(format!("sinusoidal scale factor must be positive, got {w}"));
        }
        let base = 10_000.0 / w;
        for ((k, c), v) in table.indexed_iter_mut() {
            let i = c / 2;
            let angle = k as f64 / base.powf((2 * i) as f64 / d as f64);
            *v = if c % 2 == 0 { angle.sin() } else { angle.cos() };
        }
        Ok(())
    }
}

static INITIALIZERS: [&dyn TableInitializer; 2] = [&TruncatedNormal, &Sinusoidal];

pub fn initializers() -> &'static [&'static dyn TableInitializer] {
    &INITIALIZERS
}

pub fn initializer(name: &str) -> Option<&'static dyn TableInitializer> {
    INITIALIZERS.iter().copied().find(|i| i.name() == name)
}

pub fn sinusoidal_table(rows: usize, d: usize, w: f64) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((rows, d));
    // the sinusoidal fill draws nothing from the generator
    Sinusoidal.fill(&mut t, w, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))?;
    Ok(t)
}

pub fn truncated_normal_table(rows: usize, cols: usize, std: f64, rng: &mut impl Rng) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((rows, cols));
    TruncatedNormal.fill(&mut t, std, rng)?;
    Ok(t)
}

/// Largest |⟨part_j, time_k⟩| / d over non-special rows (part 1..=128,
/// time 1..=100).
pub fn cross_orthogonality(part: &Array2<f64>, time: &Array2<f64>) -> f64 {
    let d = part.ncols() as f64;
    let gram = part.slice(s![1.., ..]).dot(&time.slice(s![1.., ..]).t());
    gram.iter().fold(0.0f64, |m, v| m.max(v.abs())) / d
}

/// Structural tables plus the projection of concatenated rows to d_hidden.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralTables {
    pub tables: [Array2<f64>; 4],
    /// (d_token + 4·d_struct) × d_hidden.
    pub proj_w: Array2<f64>,
    pub proj_b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParams {
    /// VOCAB_SIZE × d_token.
    pub token: Array2<f64>,
    pub structural: Option<StructuralTables>,
    /// n_positions × d_hidden.
    pub positional: Array2<f64>,
}

impl EmbeddingParams {
    pub fn zeros(cfg: &EmbeddingConfig, d_hidden: usize, n_positions: usize, structural: bool) -> Self {
        Self {
            token: Array2::zeros((VOCAB_SIZE, cfg.d_token)),
            structural: structural.then(|| StructuralTables {
                tables: StructTable::ALL.map(|t| Array2::zeros((t.rows(), cfg.d_struct))),
                proj_w: Array2::zeros((cfg.concat_width(), d_hidden)),
                proj_b: Array1::zeros(d_hidden),
            }),
            positional: Array2::zeros((n_positions, d_hidden)),
        }
    }

    pub fn d_hidden(&self) -> usize {
        self.positional.ncols()
    }

    pub fn n_positions(&self) -> usize {
        self.positional.nrows()
    }

    fn check(&self, ids: &[u32], labels: Option<&[TokenLabels]>, offset: usize) -> Result<()> {
        if offset + ids.len() > self.n_positions() {
            return arg_err(format!(
                "sequence of {} tokens at offset {offset} exceeds {} positions",
                ids.len(),
                self.n_positions()
            ));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= VOCAB_SIZE) {
            return arg_err(format!("token id {bad} outside the vocabulary"));
        }
        if self.structural.is_some() {
            let Some(labels) = labels else {
                return arg_err("structural embeddings need labels");
            };
            if labels.len() != ids.len() {
                return arg_err(format!("{} labels for {} tokens", labels.len(), ids.len()));
            }
            for l in labels {
                for t in StructTable::ALL {
                    if t.label(l) >= t.rows() {
                        return arg_err(format!("{} label {} out of range", t.name(), t.label(l)));
                    }
                }
            }
        }
        Ok(())
    }

    fn concat_row(&self, st: &StructuralTables, id: u32, l: &TokenLabels, mut out: ArrayViewMut1<f64>) {
        let d_token = self.token.ncols();
        out.slice_mut(s![..d_token]).assign(&self.token.row(id as usize));
        let d_struct = st.tables[0].ncols();
        for (i, t) in StructTable::ALL.iter().enumerate() {
            let lo = d_token + i * d_struct;
            out.slice_mut(s![lo..lo + d_struct])
                .assign(&st.tables[i].row(t.label(l)));
        }
    }

    fn concat(&self, st: &StructuralTables, ids: &[u32], labels: &[TokenLabels]) -> Array2<f64> {
        let mut c = Array2::zeros((ids.len(), st.proj_w.nrows()));
        for (i, (id, l)) in ids.iter().zip(labels).enumerate() {
            self.concat_row(st, *id, l, c.row_mut(i));
        }
        c
    }

    /// Input rows for `ids` placed at positions `offset..`.
    pub fn embed_at(&self, ids: &[u32], labels: Option<&[TokenLabels]>, offset: usize) -> Result<Array2<f64>> {
        self.check(ids, labels, offset)?;
        let mut h = match &self.structural {
            None => {
                let mut h = Array2::zeros((ids.len(), self.d_hidden()));
                for (i, &id) in ids.iter().enumerate() {
                    h.row_mut(i).assign(&self.token.row(id as usize));
                }
                h
            }
            Some(st) => {
                let c = self.concat(st, ids, labels.expect("checked"));
                c.dot(&st.proj_w) + &st.proj_b
            }
        };
        h += &self.positional.slice(s![offset..offset + ids.len(), ..]);
        Ok(h)
    }

    pub fn embed(&self, ids: &[u32], labels: Option<&[TokenLabels]>) -> Result<Array2<f64>> {
        self.embed_at(ids, labels, 0)
    }

    /// Accumulate parameter gradients for `d_out` = ∂L/∂embed(ids, labels).
    pub fn backward(&self, ids: &[u32], labels: Option<&[TokenLabels]>, d_out: &Array2<f64>, grad: &mut EmbeddingParams) {
        let t = ids.len();
        grad.positional
            .slice_mut(s![..t, ..])
            .zip_mut_with(d_out, |g, d| *g += d);
        match (&self.structural, &mut grad.structural) {
            (None, _) => {
                for (i, &id) in ids.iter().enumerate() {
                    add_row(grad.token.row_mut(id as usize), d_out.row(i));
                }
            }
            (Some(st), Some(gst)) => {
                let labels = labels.expect("checked in forward");
                let c = self.concat(st, ids, labels);
                gst.proj_w += &c.t().dot(d_out);
                gst.proj_b += &d_out.sum_axis(Axis(0));
                let dc = d_out.dot(&st.proj_w.t());
                let d_token = self.token.ncols();
                let d_struct = st.tables[0].ncols();
                for (i, (&id, l)) in ids.iter().zip(labels).enumerate() {
                    let row = dc.row(i);
                    add_row(grad.token.row_mut(id as usize), row.slice(s![..d_token]));
                    for (j, table) in StructTable::ALL.iter().enumerate() {
                        let lo = d_token + j * d_struct;
                        add_row(
                            gst.tables[j].row_mut(table.label(l)),
                            row.slice(s![lo..lo + d_struct]),
                        );
                    }
                }
            }
            (Some(_), None) => unreachable!("gradient buffer lacks structural tables"),
        }
    }
}

fn add_row(mut dst: ArrayViewMut1<f64>, src: ArrayView1<f64>) {
    dst += &src;
}
