//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::tensor::DenseTensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig { learning_rate, ..Default::default() }
    }
}

/// Moment estimates for a fixed list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<DenseTensor>,
    v: Vec<DenseTensor>,
    t: u64,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a DenseTensor>) -> Self {
        let m: Vec<DenseTensor> = params.into_iter().map(|p| DenseTensor::zeros(p.shape())).collect();
        AdamState { config, v: m.clone(), m, t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self, i: usize) -> &DenseTensor {
        &self.m[i]
    }

    pub fn second_moment(&self, i: usize) -> &DenseTensor {
        &self.v[i]
    }

    /// One bias-corrected update of every parameter. The state is left
    /// untouched if any gradient is non-finite or mis-shaped.
    pub fn step(&mut self, params: &mut [DenseTensor], grads: &[DenseTensor]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return dim_err(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != self.m[i].shape() || g.shape() != p.shape() {
                return dim_err(format!("adam param {i}: {} vs grad {}", p.shape(), g.shape()));
            }
            if !g.is_finite() {
                return Err(Error::Numerical(format!("non-finite gradient for parameter {i}")));
            }
        }
        self.t += 1;
        let AdamConfig { learning_rate, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let it = p
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(m.as_mut_slice().iter_mut().zip(v.as_mut_slice().iter_mut()));
            for ((pi, &gi), (mi, vi)) in it {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *pi -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
