//! Pre-LN decoder-only transformer: forward pass, manual backward pass and
//! KV-cached incremental decoding.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use rawmuse_core::labels::TokenLabels;

use crate::config::ModelConfig;
use crate::error::Result;
use crate::layers::{gelu, gelu_grad, layer_norm, layer_norm_backward, softmax_prefix, LnCache};
use crate::params::Params;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Params,
}

struct BlockCache {
    ln1: LnCache,
    a: Array2<f64>,
    qkv: Array2<f64>,
    /// Attention weights per head, T × T, zero above the diagonal.
    probs: Vec<Array2<f64>>,
    attn: Array2<f64>,
    mask1: Option<Array2<f64>>,
    ln2: LnCache,
    m: Array2<f64>,
    pre: Array2<f64>,
    act: Array2<f64>,
    mask2: Option<Array2<f64>>,
}

/// Activations kept for the backward pass of one sequence.
pub struct ForwardCache {
    ids: Vec<u32>,
    labels: Option<Vec<TokenLabels>>,
    embed_mask: Option<Array2<f64>>,
    blocks: Vec<BlockCache>,
    ln_f: LnCache,
    f: Array2<f64>,
}

fn dropout_mask(rng: &mut dyn rand::RngCore, shape: (usize, usize), p: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < p { 0.0 } else { keep })
}

fn row_sums(x: &Array2<f64>) -> Array1<f64> {
    x.sum_axis(Axis(0))
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = Params::init(&config, seed)?;
        Ok(Self { config, params })
    }

    fn attention(&self, qkv: &Array2<f64>) -> (Array2<f64>, Vec<Array2<f64>>) {
        let t = qkv.nrows();
        let d = self.config.d_hidden;
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        let mut out = Array2::zeros((t, d));
        let mut probs = Vec::with_capacity(self.config.n_heads);
        for h in 0..self.config.n_heads {
            let q = qkv.slice(s![.., h * dh..(h + 1) * dh]);
            let k = qkv.slice(s![.., d + h * dh..d + (h + 1) * dh]);
            let v = qkv.slice(s![.., 2 * d + h * dh..2 * d + (h + 1) * dh]);
            let mut p = q.dot(&k.t()) * scale;
            for (i, mut row) in p.rows_mut().into_iter().enumerate() {
                softmax_prefix(row.as_slice_mut().expect("standard layout"), i + 1);
            }
            out.slice_mut(s![.., h * dh..(h + 1) * dh]).assign(&p.dot(&v));
            probs.push(p);
        }
        (out, probs)
    }

    fn run(
        &self,
        ids: &[u32],
        labels: Option<&[TokenLabels]>,
        mut rng: Option<&mut dyn rand::RngCore>,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        let p = &self.params;
        let drop = self.config.dropout;
        let mut mask = |shape: (usize, usize)| -> Option<Array2<f64>> {
            match rng.as_deref_mut() {
                Some(r) if drop > 0.0 => Some(dropout_mask(r, shape, drop)),
                _ => None,
            }
        };
        let mut x = p.embed.embed(ids, labels)?;
        let shape = x.dim();
        let embed_mask = mask(shape);
        if let Some(m) = &embed_mask {
            x *= m;
        }
        let mut blocks = Vec::with_capacity(p.blocks.len());
        for b in &p.blocks {
            let (a, ln1) = layer_norm(x.view(), &b.ln1_gain, &b.ln1_bias);
            let qkv = a.dot(&b.attn_w) + &b.attn_b;
            let (attn, probs) = self.attention(&qkv);
            let mut y = attn.dot(&b.attn_proj_w) + &b.attn_proj_b;
            let mask1 = mask(shape);
            if let Some(m) = &mask1 {
                y *= m;
            }
            x += &y;
            let (m, ln2) = layer_norm(x.view(), &b.ln2_gain, &b.ln2_bias);
            let pre = m.dot(&b.fc_w) + &b.fc_b;
            let act = pre.mapv(gelu);
            let mut z = act.dot(&b.mlp_proj_w) + &b.mlp_proj_b;
            let mask2 = mask(shape);
            if let Some(mk) = &mask2 {
                z *= mk;
            }
            x += &z;
            blocks.push(BlockCache {
                ln1,
                a,
                qkv,
                probs,
                attn,
                mask1,
                ln2,
                m,
                pre,
                act,
                mask2,
            });
        }
        let (f, ln_f) = layer_norm(x.view(), &p.ln_f_gain, &p.ln_f_bias);
        let logits = f.dot(&p.lm_head);
        Ok((
            logits,
            ForwardCache {
                ids: ids.to_vec(),
                labels: labels.map(<[TokenLabels]>::to_vec),
                embed_mask,
                blocks,
                ln_f,
                f,
            },
        ))
    }

    /// Logits for every position, T × VOCAB_SIZE, without dropout.
    pub fn forward(&self, ids: &[u32], labels: Option<&[TokenLabels]>) -> Result<Array2<f64>> {
        Ok(self.run(ids, labels, None)?.0)
    }

    /// Forward pass that keeps activations; dropout is drawn from `rng`.
    pub fn forward_train(
        &self,
        ids: &[u32],
        labels: Option<&[TokenLabels]>,
        rng: Option<&mut dyn rand::RngCore>,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        self.run(ids, labels, rng)
    }

    /// Gradients of a scalar loss given ∂L/∂logits.
    pub fn backward(&self, cache: &ForwardCache, d_logits: &Array2<f64>) -> Params {
        let p = &self.params;
        let mut g = p.zeros_like();
        let d = self.config.d_hidden;
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();

        g.lm_head += &cache.f.t().dot(d_logits);
        let df = d_logits.dot(&p.lm_head.t());
        let mut dx = layer_norm_backward(&df, &cache.ln_f, &p.ln_f_gain, &mut g.ln_f_gain, &mut g.ln_f_bias);

        for (l, bc) in cache.blocks.iter().enumerate().rev() {
            let b = &p.blocks[l];
            let gb = &mut g.blocks[l];

            let mut dz = dx.clone();
            if let Some(m) = &bc.mask2 {
                dz *= m;
            }
            gb.mlp_proj_w += &bc.act.t().dot(&dz);
            gb.mlp_proj_b += &row_sums(&dz);
            let mut dpre = dz.dot(&b.mlp_proj_w.t());
            dpre.zip_mut_with(&bc.pre, |g, &x| *g *= gelu_grad(x));
            gb.fc_w += &bc.m.t().dot(&dpre);
            gb.fc_b += &row_sums(&dpre);
            let dm = dpre.dot(&b.fc_w.t());
            dx += &layer_norm_backward(&dm, &bc.ln2, &b.ln2_gain, &mut gb.ln2_gain, &mut gb.ln2_bias);

            let mut dy = dx.clone();
            if let Some(m) = &bc.mask1 {
                dy *= m;
            }
            gb.attn_proj_w += &bc.attn.t().dot(&dy);
            gb.attn_proj_b += &row_sums(&dy);
            let dattn = dy.dot(&b.attn_proj_w.t());
            let mut dqkv = Array2::zeros(bc.qkv.dim());
            for (h, probs) in bc.probs.iter().enumerate() {
                let (qs, ks, vs) = (h * dh, d + h * dh, 2 * d + h * dh);
                let q = bc.qkv.slice(s![.., qs..qs + dh]);
                let k = bc.qkv.slice(s![.., ks..ks + dh]);
                let v = bc.qkv.slice(s![.., vs..vs + dh]);
                let dout = dattn.slice(s![.., qs..qs + dh]);
                let dp = dout.dot(&v.t());
                dqkv.slice_mut(s![.., vs..vs + dh]).assign(&probs.t().dot(&dout));
                let mut ds = &dp * probs;
                for (mut row, prow) in ds.rows_mut().into_iter().zip(probs.rows()) {
                    let total = row.sum();
                    row.zip_mut_with(&prow, |v, &pv| *v -= pv * total);
                }
                ds *= scale;
                dqkv.slice_mut(s![.., qs..qs + dh]).assign(&ds.dot(&k));
                dqkv.slice_mut(s![.., ks..ks + dh]).assign(&ds.t().dot(&q));
            }
            gb.attn_w += &bc.a.t().dot(&dqkv);
            gb.attn_b += &row_sums(&dqkv);
            let da = dqkv.dot(&b.attn_w.t());
            dx += &layer_norm_backward(&da, &bc.ln1, &b.ln1_gain, &mut gb.ln1_gain, &mut gb.ln1_bias);
        }
        if let Some(m) = &cache.embed_mask {
            dx *= m;
        }
        p.embed
            .backward(&cache.ids, cache.labels.as_deref(), &dx, &mut g.embed);
        g
    }

    pub fn kv_cache(&self) -> KvCache {
        let (n, d) = (self.config.n_positions, self.config.d_hidden);
        KvCache {
            keys: (0..self.config.n_layers).map(|_| Array2::zeros((n, d))).collect(),
            values: (0..self.config.n_layers).map(|_| Array2::zeros((n, d))).collect(),
            len: 0,
        }
    }

    /// Logits for the next position after feeding one more token. Matches
    /// the last row of a full forward pass over the same prefix.
    pub fn step(&self, cache: &mut KvCache, id: u32, labels: Option<TokenLabels>) -> Result<Array1<f64>> {
        let p = &self.params;
        let pos = cache.len;
        let lab = labels.map(|l| [l]);
        let mut x = p.embed.embed_at(&[id], lab.as_ref().map(|l| &l[..]), pos)?;
        let d = self.config.d_hidden;
        let dh = self.config.head_dim();
        let scale = 1.0 / (dh as f64).sqrt();
        for (l, b) in p.blocks.iter().enumerate() {
            let (a, _) = layer_norm(x.view(), &b.ln1_gain, &b.ln1_bias);
            let qkv = a.dot(&b.attn_w) + &b.attn_b;
            cache.keys[l].row_mut(pos).assign(&qkv.slice(s![0, d..2 * d]));
            cache.values[l].row_mut(pos).assign(&qkv.slice(s![0, 2 * d..]));
            let keys: ArrayView2<f64> = cache.keys[l].slice(s![..=pos, ..]);
            let values: ArrayView2<f64> = cache.values[l].slice(s![..=pos, ..]);
            let mut attn = Array2::zeros((1, d));
            for h in 0..self.config.n_heads {
                let cols = h * dh..(h + 1) * dh;
                let q = qkv.slice(s![0, cols.clone()]);
                let raw: Array1<f64> = keys.slice(s![.., cols.clone()]).dot(&q);
                let mut scores: Vec<f64> = raw
                    .iter()
                    .map(|v| v * scale)
                    .collect();
                let n = scores.len();
                softmax_prefix(&mut scores, n);
                let w = Array1::from(scores);
                attn.slice_mut(s![0, cols.clone()])
                    .assign(&values.slice(s![.., cols]).t().dot(&w));
            }
            x += &(attn.dot(&b.attn_proj_w) + &b.attn_proj_b);
            let (m, _) = layer_norm(x.view(), &b.ln2_gain, &b.ln2_bias);
            let act = (m.dot(&b.fc_w) + &b.fc_b).mapv(gelu);
            x += &(act.dot(&b.mlp_proj_w) + &b.mlp_proj_b);
        }
        let (f, _) = layer_norm(x.view(), &p.ln_f_gain, &p.ln_f_bias);
        cache.len += 1;
        Ok(f.row(0).dot(&p.lm_head))
    }
}

/// Per-layer keys and values of the tokens fed so far.
pub struct KvCache {
    keys: Vec<Array2<f64>>,
    values: Vec<Array2<f64>>,
    len: usize,
}

impl KvCache {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}
