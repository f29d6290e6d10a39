//! Tensor nuclear norm completion by ADMM with per-Fourier-slice singular
//! value thresholding.
//!
//! Solves `min TNN(X)` subject to `X = O` on the observed entries, where
//! `TNN(X) = (1/n3) sum_k ||DFT(X)^(k)||_*`, via the splitting `X = E`:
//!
//! ```text
//! X <- SVT_{1/rho}(E - Y/rho)            (in the Fourier domain)
//! E <- O on observed entries, X + Y/rho elsewhere
//! Y <- Y + rho (X - E);  rho <- min(mu rho, rho_max)
//! ```

use serde::{Deserialize, Serialize};

use crate::data::ensure_binary;
use crate::error::{dim_err, Error, Result};
use crate::tensor::{dft_mode3, idft_mode3, slice_svd, ComplexTensor, DenseTensor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    pub rho: f64,
    pub mu: f64,
    pub rho_max: f64,
    pub max_iter: usize,
    /// Stop once the largest of the relative changes of `X`, `E` and the
    /// residual `X - E` falls below this.
    pub tol: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams { rho: 1e-2, mu: 1.05, rho_max: 1e10, max_iter: 500, tol: 1e-6 }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.mu >= 1.0 && self.tol > 0.0 && self.rho_max >= self.rho) {
            return Err(Error::Config(format!("invalid ADMM parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TnnOutcome {
    /// Completed tensor; equals the observation bitwise on observed entries.
    pub x: DenseTensor,
    pub iterations: usize,
    /// `false` when `max_iter` was reached before the tolerance.
    pub converged: bool,
    /// TNN of the low-rank iterate after each iteration.
    pub tnn_history: Vec<f64>,
}

/// Soft-thresholds the singular values of every frontal slice by `tau`.
pub fn svt_slices(c: &ComplexTensor, tau: f64) -> Result<ComplexTensor> {
    Ok(svt_with_norm(c, tau)?.0)
}

/// Thresholded tensor and the sum of its slice nuclear norms.
fn svt_with_norm(c: &ComplexTensor, tau: f64) -> Result<(ComplexTensor, f64)> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::Contract(format!("threshold must be nonnegative, got {tau}")));
    }
    let mut nuclear = 0.0;
    let slices = slice_svd(c)?
        .into_iter()
        .map(|svd| {
            let shrunk: Vec<f64> = svd.sigma.iter().map(|s| (s - tau).max(0.0)).collect();
            nuclear += shrunk.iter().sum::<f64>();
            svd.reconstruct_with(&shrunk)
        })
        .collect::<Vec<_>>();
    Ok((ComplexTensor::from_slices(&slices)?, nuclear))
}

/// `(1/n3) sum_k ||DFT(t)^(k)||_*`.
pub fn tensor_nuclear_norm(t: &DenseTensor) -> Result<f64> {
    let n3 = t.shape().n3 as f64;
    Ok(slice_svd(&dft_mode3(t))?.iter().map(|s| s.sigma.iter().sum::<f64>()).sum::<f64>() / n3)
}

fn rel_change(a: &DenseTensor, b: &DenseTensor, scale: f64) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() / scale
}

pub fn tnn_admm_complete(o: &DenseTensor, m: &DenseTensor, params: &AdmmParams) -> Result<TnnOutcome> {
    params.validate()?;
    if o.shape() != m.shape() {
        return dim_err(format!("observation {} vs mask {}", o.shape(), m.shape()));
    }
    ensure_binary(m)?;
    let n3 = o.shape().n3 as f64;
    let project = |free: &DenseTensor| {
        DenseTensor::from_fn(
            o.shape(),
            |i, j, k| if m.get(i, j, k) == 1.0 { o.get(i, j, k) } else { free.get(i, j, k) },
        )
    };
    let scale = o.zip_map(m, |a, b| a * b)?.frobenius_norm().max(f64::MIN_POSITIVE);

    let mut x = DenseTensor::zeros(o.shape());
    let mut e = project(&x);
    let mut y = DenseTensor::zeros(o.shape());
    let mut rho = params.rho;
    let mut history = Vec::new();
    for it in 1..=params.max_iter {
        let target = e.zip_map(&y, |ei, yi| ei - yi / rho)?;
        let (low, nuclear) = svt_with_norm(&dft_mode3(&target), 1.0 / rho)?;
        let (x_new, _) = idft_mode3(&low).split_real();
        history.push(nuclear / n3);
        let e_new = project(&x_new.zip_map(&y, |xi, yi| xi + yi / rho)?);
        let residual = x_new.sub(&e_new)?;
        let change =
            rel_change(&x_new, &x, scale).max(rel_change(&e_new, &e, scale)).max(residual.frobenius_norm() / scale);
        y = y.zip_map(&residual, |yi, r| yi + rho * r)?;
        rho = (rho * params.mu).min(params.rho_max);
        x = x_new;
        e = e_new;
        if !e.is_finite() {
            return Err(Error::Numerical(format!("ADMM diverged at iteration {it}")));
        }
        if change <= params.tol {
            return Ok(TnnOutcome { x: e, iterations: it, converged: true, tnn_history: history });
        }
    }
    Ok(TnnOutcome { x: e, iterations: params.max_iter, converged: false, tnn_history: history })
}
