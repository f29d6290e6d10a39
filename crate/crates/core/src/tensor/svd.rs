use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{dft_mode3, CMatrix, ComplexTensor, DenseTensor};
use crate::error::{Error, Result};

/// Default relative cutoff used by [`tubal_rank`].
pub const DEFAULT_TUBAL_TOL: f64 = 1e-8;

const SVD_MAX_ITER: usize = 10_000;

/// Thin SVD of one frontal slice: `slice = u * diag(sigma) * v_t`.
#[derive(Clone, Debug)]
pub struct SliceSvd {
    pub u: CMatrix,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<f64>,
    pub v_t: CMatrix,
}

impl SliceSvd {
    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(&self.sigma)
    }

    /// Recombines the singular vectors with replacement singular values.
    pub fn reconstruct_with(&self, sigma: &[f64]) -> CMatrix {
        let mut scaled = self.u.clone();
        for (j, s) in sigma.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * &self.v_t
    }
}

pub(crate) fn svd_matrix(m: CMatrix) -> Result<SliceSvd> {
    let svd = m
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numerical("slice SVD did not converge".into()))?;
    let sigma = svd.singular_values.iter().copied().collect();
    Ok(SliceSvd { u: svd.u.expect("u requested"), sigma, v_t: svd.v_t.expect("v_t requested") })
}

/// SVD of every frontal slice of `c`.
pub fn slice_svd(c: &ComplexTensor) -> Result<Vec<SliceSvd>> {
    (0..c.shape().n3).map(|k| svd_matrix(c.slice_matrix(k))).collect()
}

/// Largest per-slice numerical rank of the mode-3 DFT of `a`, counting
/// singular values above `tol * sigma_max` of the whole transformed tensor.
pub fn tubal_rank(a: &DenseTensor, tol: f64) -> Result<usize> {
    if tol <= 0.0 {
        return Err(Error::Contract(format!("tubal rank tolerance must be positive, got {tol}")));
    }
    let c = dft_mode3(a);
    let spectra: Vec<Vec<f64>> = (0..c.shape().n3)
        .map(|k| {
            let m: DMatrix<Complex64> = c.slice_matrix(k);
            m.singular_values().iter().copied().collect()
        })
        .collect();
    let sigma_max = spectra.iter().flatten().fold(0.0f64, |m, &s| m.max(s));
    let cutoff = tol * sigma_max;
    Ok(spectra.iter().map(|s| s.iter().filter(|&&v| v > cutoff).count()).max().unwrap_or(0))
}
