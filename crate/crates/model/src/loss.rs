//! Next-token negative log-likelihood with PAD targets masked out.

use ndarray::Array2;

use rawmuse_core::tokenizer::PAD_ID;

use crate::error::{arg_err, Result};
use crate::layers::log_sum_exp;

pub struct NllSum {
    /// Summed NLL over counted targets.
    pub total: f64,
    pub count: usize,
    /// ∂total/∂logits.
    pub d_logits: Array2<f64>,
}

impl NllSum {
    pub fn mean(&self) -> f64 {
        self.total / self.count as f64
    }
}

/// Row i of `logits` predicts `ids[i + 1]`; the last row predicts nothing.
pub fn next_token_nll(logits: &Array2<f64>, ids: &[u32]) -> Result<NllSum> {
    if ids.len() < 2 {
        return arg_err("next-token loss needs at least 2 tokens");
    }
    if logits.nrows() != ids.len() {
        return arg_err(format!("{} logit rows for {} tokens", logits.nrows(), ids.len()));
    }
    let mut d_logits = Array2::zeros(logits.dim());
    let mut total = 0.0;
    let mut count = 0;
    for i in 0..ids.len() - 1 {
        let target = ids[i + 1];
        if target == PAD_ID {
            continue;
        }
        let row = logits.row(i);
        let lse = log_sum_exp(row);
        total += lse - row[target as usize];
        count += 1;
        let mut g = d_logits.row_mut(i);
        g.assign(&row.mapv(|v| (v - lse).exp()));
        g[target as usize] -= 1.0;
    }
    if count == 0 {
        return arg_err("every target is PAD");
    }
    Ok(NllSum {
        total,
        count,
        d_logits,
    })
}
