//! Tensor files, masks, band normalization, synthetic volumes and image export.

mod dtt;
mod image;
mod mask;
mod synth;

use crate::error::{dim_err, Result};
use crate::tensor::DenseTensor;

pub use dtt::{decode, encode, load_tensor, read_dtt, save_stored, save_tensor, Stored, MAGIC};
pub use image::{encode_ppm, export_image, to_byte};
pub use mask::{ensure_binary, gen_mask, gen_random_mask, gen_tube_mask, sampling_rate, MaskMode};
pub use synth::{synth_low_tubal_rank, synth_smooth};

/// Order-4 tensor `n1 x n2 x n3 x n4`, stored with the fourth index slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    pub dims: [usize; 4],
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn from_vec(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.contains(&0) || data.len() != n {
            return dim_err(format!("order-4 dims {dims:?} need {n} values, got {}", data.len()));
        }
        Ok(Tensor4 { dims, data })
    }

    pub fn get(&self, i1: usize, i2: usize, i3: usize, i4: usize) -> f64 {
        let [n1, n2, n3, _] = self.dims;
        self.data[((i4 * n3 + i3) * n2 + i2) * n1 + i1]
    }

    /// `n1 x n2 x (n3 n4)` with the mode-3 index varying fastest in the
    /// merged axis. The buffer is shared verbatim.
    pub fn fold(&self) -> DenseTensor {
        let [n1, n2, n3, n4] = self.dims;
        DenseTensor::from_vec((n1, n2, n3 * n4), self.data.clone()).expect("sizes match")
    }

    /// Inverse of [`Tensor4::fold`].
    pub fn unfold(t: &DenseTensor, n3: usize, n4: usize) -> Result<Self> {
        let s = t.shape();
        if n3 * n4 != s.n3 {
            return dim_err(format!("cannot split {} slices into {n3} x {n4}", s.n3));
        }
        Tensor4::from_vec([s.n1, s.n2, n3, n4], t.as_slice().to_vec())
    }
}

/// Per-band `(min, max)` used by [`normalize_bands`].
pub type BandRange = (f64, f64);

/// Maps every frontal slice affinely onto `[0, 1]`; a constant band maps to
/// zeros.
pub fn normalize_bands(t: &DenseTensor) -> (DenseTensor, Vec<BandRange>) {
    let mut out = t.clone();
    let mut ranges = Vec::with_capacity(t.shape().n3);
    for k in 0..t.shape().n3 {
        let band = out.frontal_mut(k);
        let lo = band.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = band.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for v in band.iter_mut() {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
        ranges.push((lo, hi));
    }
    (out, ranges)
}

/// Inverse of [`normalize_bands`].
pub fn denormalize_bands(t: &DenseTensor, ranges: &[BandRange]) -> Result<DenseTensor> {
    if ranges.len() != t.shape().n3 {
        return dim_err(format!("{} band ranges for {}", ranges.len(), t.shape()));
    }
    let mut out = t.clone();
    for (k, &(lo, hi)) in ranges.iter().enumerate() {
        out.frontal_mut(k).iter_mut().for_each(|v| *v = lo + *v * (hi - lo));
    }
    Ok(out)
}
