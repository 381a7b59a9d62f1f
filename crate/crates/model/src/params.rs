//! Parameter blocks of the decoder, addressed by stable dotted names.

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::embedding::{initializer, EmbeddingParams, StructTable, TruncatedNormal, TableInitializer};
use crate::error::{arg_err, Result};
use crate::variant::variant;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    /// d × 3d, columns ordered q | k | v.
    pub attn_w: Array2<f64>,
    pub attn_b: Array1<f64>,
    pub attn_proj_w: Array2<f64>,
    pub attn_proj_b: Array1<f64>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
    pub fc_w: Array2<f64>,
    pub fc_b: Array1<f64>,
    pub mlp_proj_w: Array2<f64>,
    pub mlp_proj_b: Array1<f64>,
}

impl BlockParams {
    fn zeros(d: usize, d_ff: usize) -> Self {
        Self {
            ln1_gain: Array1::zeros(d),
            ln1_bias: Array1::zeros(d),
            attn_w: Array2::zeros((d, 3 * d)),
            attn_b: Array1::zeros(3 * d),
            attn_proj_w: Array2::zeros((d, d)),
            attn_proj_b: Array1::zeros(d),
            ln2_gain: Array1::zeros(d),
            ln2_bias: Array1::zeros(d),
            fc_w: Array2::zeros((d, d_ff)),
            fc_b: Array1::zeros(d_ff),
            mlp_proj_w: Array2::zeros((d_ff, d)),
            mlp_proj_b: Array1::zeros(d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub embed: EmbeddingParams,
    pub blocks: Vec<BlockParams>,
    pub ln_f_gain: Array1<f64>,
    pub ln_f_bias: Array1<f64>,
    /// d × VOCAB_SIZE, not tied to the token table.
    pub lm_head: Array2<f64>,
}

macro_rules! block_fields {
    ($m:ident, $b:expr, $f:expr, $prefix:expr) => {{
        $f(format!("{}.ln1.gain", $prefix), $b.ln1_gain.$m().into_dyn());
        $f(format!("{}.ln1.bias", $prefix), $b.ln1_bias.$m().into_dyn());
        $f(format!("{}.attn.weight", $prefix), $b.attn_w.$m().into_dyn());
        $f(format!("{}.attn.bias", $prefix), $b.attn_b.$m().into_dyn());
        $f(format!("{}.attn.proj.weight", $prefix), $b.attn_proj_w.$m().into_dyn());
        $f(format!("{}.attn.proj.bias", $prefix), $b.attn_proj_b.$m().into_dyn());
        $f(format!("{}.ln2.gain", $prefix), $b.ln2_gain.$m().into_dyn());
        $f(format!("{}.ln2.bias", $prefix), $b.ln2_bias.$m().into_dyn());
        $f(format!("{}.mlp.fc.weight", $prefix), $b.fc_w.$m().into_dyn());
        $f(format!("{}.mlp.fc.bias", $prefix), $b.fc_b.$m().into_dyn());
        $f(format!("{}.mlp.proj.weight", $prefix), $b.mlp_proj_w.$m().into_dyn());
        $f(format!("{}.mlp.proj.bias", $prefix), $b.mlp_proj_b.$m().into_dyn());
    }};
}

macro_rules! all_fields {
    ($m:ident, $opt:ident, $it:ident, $p:expr, $f:expr) => {{
        $f("embed.token".to_string(), $p.embed.token.$m().into_dyn());
        if let Some(st) = $p.embed.structural.$opt() {
            for (t, table) in StructTable::ALL.iter().zip(st.tables.$it()) {
                $f(format!("embed.{}", t.name()), table.$m().into_dyn());
            }
            $f("embed.proj.weight".to_string(), st.proj_w.$m().into_dyn());
            $f("embed.proj.bias".to_string(), st.proj_b.$m().into_dyn());
        }
        $f("embed.positional".to_string(), $p.embed.positional.$m().into_dyn());
        for (i, b) in $p.blocks.$it().enumerate() {
            block_fields!($m, b, $f, format!("blocks.{i}"));
        }
        $f("ln_f.gain".to_string(), $p.ln_f_gain.$m().into_dyn());
        $f("ln_f.bias".to_string(), $p.ln_f_bias.$m().into_dyn());
        $f("lm_head.weight".to_string(), $p.lm_head.$m().into_dyn());
    }};
}

impl Params {
    /// All-zero parameters with the shapes implied by `cfg`.
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d_hidden;
        Ok(Self {
            embed: EmbeddingParams::zeros(&cfg.embedding, d, cfg.n_positions, cfg.uses_structure()),
            blocks: (0..cfg.n_layers).map(|_| BlockParams::zeros(d, cfg.d_ff)).collect(),
            ln_f_gain: Array1::zeros(d),
            ln_f_bias: Array1::zeros(d),
            lm_head: Array2::zeros((d, rawmuse_core::VOCAB_SIZE)),
        })
    }

    /// Seeded initialization: truncated-normal weights, residual output
    /// projections scaled by 1/√(2·n_layers), zero biases, unit gains;
    /// structural tables per the variant.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(cfg)?;
        let v = variant(&cfg.variant).expect("validated");
        let std = cfg.embedding.init_std;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tn = TruncatedNormal;
        tn.fill(&mut p.embed.token, std, &mut rng)?;
        if let Some(st) = &mut p.embed.structural {
            for (t, table) in StructTable::ALL.iter().zip(st.tables.iter_mut()) {
                let (name, param) = v.table_init(*t, &cfg.embedding);
                let Some(init) = initializer(name) else {
                    return arg_err(format!("unknown table initializer {name:?}"));
                };
                init.fill(table, param, &mut rng)?;
            }
            tn.fill(&mut st.proj_w, std, &mut rng)?;
        }
        tn.fill(&mut p.embed.positional, std, &mut rng)?;
        let resid_std = std / (2.0 * cfg.n_layers as f64).sqrt();
        for b in &mut p.blocks {
            b.ln1_gain.fill(1.0);
            b.ln2_gain.fill(1.0);
            tn.fill(&mut b.attn_w, std, &mut rng)?;
            tn.fill(&mut b.attn_proj_w, resid_std, &mut rng)?;
            tn.fill(&mut b.fc_w, std, &mut rng)?;
            tn.fill(&mut b.mlp_proj_w, resid_std, &mut rng)?;
        }
        p.ln_f_gain.fill(1.0);
        tn.fill(&mut p.lm_head, std, &mut rng)?;
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|_, mut t| t.fill(0.0));
        z
    }

    pub fn for_each(&self, mut f: impl FnMut(String, ArrayViewD<'_, f64>)) {
        all_fields!(view, as_ref, iter, self, f);
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(String, ArrayViewMutD<'_, f64>)) {
        all_fields!(view_mut, as_mut, iter_mut, self, f);
    }

    /// Block names and shapes in storage order.
    pub fn census(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        self.for_each(|name, t| out.push((name, t.shape().to_vec())));
        out
    }

    pub fn n_params(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, t| n += t.len());
        n
    }

    /// Mutable views of all blocks, in storage order.
    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut out = Vec::new();
        all_fields!(view_mut, as_mut, iter_mut, self, |name, t| out.push((name, t)));
        out
    }

    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = Vec::new();
        all_fields!(view, as_ref, iter, self, |name, t| out.push((name, t)));
        out
    }

    /// self += other, blockwise. Shapes must match.
    pub fn add_assign(&mut self, other: &Params) {
        let src = other.tensors();
        for ((_, mut dst), (_, s)) in self.tensors_mut().into_iter().zip(src) {
            Zip::from(&mut dst).and(&s).for_each(|d, s| *d += s);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.for_each_mut(|_, mut t| t.mapv_inplace(|v| v * factor));
    }

    pub fn global_norm(&self) -> f64 {
        let mut sq = 0.0;
        self.for_each(|_, t| sq += t.iter().map(|v| v * v).sum::<f64>());
        sq.sqrt()
    }
}
