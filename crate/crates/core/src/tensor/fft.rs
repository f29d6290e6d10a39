use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{CMatrix, ComplexTensor, DenseTensor};

/// `n x n` DFT matrix, `F(j, k) = exp(-2 pi i j k / n)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |j, k| Complex64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64))
}

/// `F^{-1} = conj(F) / n`.
pub fn inverse_dft_matrix(n: usize) -> CMatrix {
    dft_matrix(n).map(|v| v.conj() / n as f64)
}

/// Unnormalized DFT along mode 3.
pub fn dft_mode3(t: &DenseTensor) -> ComplexTensor {
    let mut c = t.to_complex();
    transform_tubes(&mut c, false);
    c
}

/// Inverse DFT along mode 3, scaled by `1 / n3`.
pub fn idft_mode3(c: &ComplexTensor) -> ComplexTensor {
    let mut out = c.clone();
    transform_tubes(&mut out, true);
    out
}

fn transform_tubes(c: &mut ComplexTensor, inverse: bool) {
    let shape = c.shape();
    let n3 = shape.n3;
    if n3 == 1 {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n3) } else { planner.plan_fft_forward(n3) };
    let stride = shape.slice_len();
    let scale = if inverse { 1.0 / n3 as f64 } else { 1.0 };
    let data = c.as_mut_slice();
    let mut tube = vec![Complex64::new(0.0, 0.0); n3];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for p in 0..stride {
        for (k, v) in tube.iter_mut().enumerate() {
            *v = data[k * stride + p];
        }
        fft.process_with_scratch(&mut tube, &mut scratch);
        for (k, v) in tube.iter().enumerate() {
            data[k * stride + p] = v * scale;
        }
    }
}
