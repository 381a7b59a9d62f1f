//! AdamW with decoupled weight decay and the warmup-then-linear-decay
//! learning-rate schedule.

use ndarray::{ArrayD, Zip};
use serde::{Deserialize, Serialize};

use crate::params::Params;

/// Linear ramp to `peak` over `warmup` updates, then linear decay reaching
/// zero at update `total`. Updates are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSchedule {
    pub peak: f64,
    pub warmup: u64,
    pub total: u64,
}

impl LinearSchedule {
    pub fn lr(&self, step: u64) -> f64 {
        if step == 0 || step >= self.total {
            return 0.0;
        }
        if step <= self.warmup {
            return self.peak * step as f64 / self.warmup as f64;
        }
        self.peak * (self.total - step) as f64 / (self.total - self.warmup) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Applied to two-dimensional blocks only.
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

pub struct AdamW {
    pub config: AdamWConfig,
    m: Vec<ArrayD<f64>>,
    v: Vec<ArrayD<f64>>,
    t: u64,
}

impl AdamW {
    pub fn new(config: AdamWConfig, params: &Params) -> Self {
        let mut m = Vec::new();
        params.for_each(|_, t| m.push(ArrayD::zeros(t.shape())));
        Self {
            config,
            v: m.clone(),
            m,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn update(&mut self, params: &mut Params, grads: &Params, lr: f64) {
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let grads = grads.tensors();
        for (i, ((_, mut p), (_, g))) in params.tensors_mut().into_iter().zip(grads).enumerate() {
            let decay = if p.ndim() == 2 { c.weight_decay } else { 0.0 };
            Zip::from(&mut p)
                .and(&g)
                .and(&mut self.m[i])
                .and(&mut self.v[i])
                .for_each(|p, &g, m, v| {
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let update = (*m / bc1) / ((*v / bc2).sqrt() + c.eps);
                    *p -= lr * (update + decay * *p);
                });
        }
    }
}
