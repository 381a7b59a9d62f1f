//! Self-similarity matrices from chroma, with forward diagonal smoothing and
//! relative thresholding.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::chroma::ChromaSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsmParams {
    /// Forward smoothing length along diagonals, in frames.
    pub smoothing_len: usize,
    /// Quantile of off-diagonal values kept; the rest become `penalty`.
    pub threshold_quantile: f64,
    pub penalty: f64,
    /// Rescale kept values from [threshold, max] to [0, 1].
    pub scale: bool,
}

impl Default for SsmParams {
    fn default() -> Self {
        Self {
            smoothing_len: 4,
            threshold_quantile: 0.85,
            penalty: -2.0,
            scale: true,
        }
    }
}

/// Cosine similarity of chroma frames; 0 where either frame is silent.
pub fn cosine_ssm(c: &ChromaSequence) -> Array2<f64> {
    let n = c.len();
    let norms: Vec<f64> = c
        .frames
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = c.frames[i].iter().zip(&c.frames[j]).map(|(a, b)| a * b).sum();
            let v = dot / (norms[i] * norms[j]);
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    s
}

/// Mean of the next `len` entries along each diagonal, over those in range.
pub fn smooth_forward(s: &Array2<f64>, len: usize) -> Array2<f64> {
    let n = s.nrows();
    if len <= 1 {
        return s.clone();
    }
    Array2::from_shape_fn((n, n), |(i, j)| {
        let steps = len.min(n - i.max(j));
        let sum: f64 = (0..steps).map(|l| s[[i + l, j + l]]).sum();
        sum / steps as f64
    })
}

/// Linear-interpolated quantile (the usual "linear" definition).
pub fn quantile(values: &mut [f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(values[lo] + (values[hi] - values[lo]) * frac)
}

/// Keep off-diagonal values above the quantile, set the rest to the penalty,
/// and pin the main diagonal to 1.
pub fn threshold(s: &Array2<f64>, params: &SsmParams) -> Array2<f64> {
    let n = s.nrows();
    let mut off: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off.push(s[[i, j]]);
            }
        }
    }
    let mut out = s.clone();
    if let Some(tau) = quantile(&mut off, params.threshold_quantile) {
        let max = off.last().copied().unwrap_or(tau);
        for ((i, j), v) in out.indexed_iter_mut() {
            if i == j {
                continue;
            }
            // Ties at the threshold survive only as a positive maximum, so
            // zeros in a sparse or silent matrix are never kept.
            if *v <= tau && (*v < max || max <= 0.0) {
                *v = params.penalty;
            } else if params.scale {
                *v = if max > tau { (*v - tau) / (max - tau) } else { 1.0 };
            }
        }
    }
    for i in 0..n {
        out[[i, i]] = 1.0;
    }
    out
}

/// Full pipeline: cosine similarity, diagonal smoothing, thresholding.
pub fn ssm(c: &ChromaSequence, params: &SsmParams) -> Array2<f64> {
    let raw = cosine_ssm(c);
    let smoothed = smooth_forward(&raw, params.smoothing_len);
    threshold(&smoothed, params)
}
