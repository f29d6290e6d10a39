//! im2col-based 2D convolution over the frontal slices (channels) of a tensor.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Result};
use crate::tensor::{DenseTensor, Shape};

/// Square-kernel convolution geometry with symmetric zero padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv2dSpec {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2dSpec {
    pub fn new(kernel: usize, stride: usize, padding: usize) -> Self {
        Conv2dSpec { kernel, stride, padding }
    }

    /// Kernel tensor dims: `(k*k, c_in, c_out)`.
    pub fn kernel_shape(&self, c_in: usize, c_out: usize) -> Shape {
        Shape::new(self.kernel * self.kernel, c_in, c_out)
    }

    fn out_len(&self, n: usize) -> Option<usize> {
        let padded = n + 2 * self.padding;
        if self.kernel == 0 || self.stride == 0 || padded < self.kernel {
            return None;
        }
        Some((padded - self.kernel) / self.stride + 1)
    }
}

pub(crate) struct ConvPlan {
    pub spec: Conv2dSpec,
    pub input: Shape,
    pub out: Shape,
}

impl ConvPlan {
    pub fn new(spec: Conv2dSpec, input: Shape, kernel: Shape, bias: Option<Shape>) -> Result<Self> {
        let (Some(o1), Some(o2)) = (spec.out_len(input.n1), spec.out_len(input.n2)) else {
            return dim_err(format!("conv2d {spec:?} does not fit input {input}"));
        };
        let kk = spec.kernel * spec.kernel;
        if kernel.n1 != kk || kernel.n2 != input.n3 {
            return dim_err(format!(
                "conv2d kernel {kernel} incompatible with k={} and {} input channels",
                spec.kernel, input.n3
            ));
        }
        if let Some(b) = bias {
            if b != Shape::new(1, 1, kernel.n3) {
                return dim_err(format!("conv2d bias {b} must be 1x1x{}", kernel.n3));
            }
        }
        Ok(ConvPlan { spec, input, out: Shape::new(o1, o2, kernel.n3) })
    }

    fn rows(&self) -> usize {
        self.spec.kernel * self.spec.kernel * self.input.n3
    }

    fn pixels(&self) -> usize {
        self.out.slice_len()
    }

    /// Visits `(col_row, col_col, input_offset)` for every in-bounds tap.
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize)) {
        let Conv2dSpec { kernel: k, stride, padding } = self.spec;
        let (n1, n2) = (self.input.n1 as isize, self.input.n2 as isize);
        let (o1, o2) = (self.out.n1, self.out.n2);
        let p = self.pixels();
        for ci in 0..self.input.n3 {
            for dj in 0..k {
                for di in 0..k {
                    let row = ci * k * k + dj * k + di;
                    for b in 0..o2 {
                        let y = (b * stride + dj) as isize - padding as isize;
                        if y < 0 || y >= n2 {
                            continue;
                        }
                        for a in 0..o1 {
                            let x = (a * stride + di) as isize - padding as isize;
                            if x < 0 || x >= n1 {
                                continue;
                            }
                            let src = self.input.offset(x as usize, y as usize, ci);
                            f(row * p + b * o1 + a, src);
                        }
                    }
                }
            }
        }
    }

    pub fn im2col(&self, input: &DenseTensor) -> Vec<f64> {
        let mut cols = vec![0.0; self.rows() * self.pixels()];
        let src = input.as_slice();
        self.for_each_tap(|dst, s| cols[dst] = src[s]);
        cols
    }

    fn col2im(&self, dcols: &[f64]) -> DenseTensor {
        let mut out = DenseTensor::zeros(self.input);
        let dst = out.as_mut_slice();
        self.for_each_tap(|c, s| dst[s] += dcols[c]);
        out
    }

    pub fn forward(&self, cols: &[f64], kernel: &DenseTensor, bias: Option<&DenseTensor>) -> DenseTensor {
        let (m, k, n) = (self.out.n3, self.rows(), self.pixels());
        let mut out = DenseTensor::zeros(self.out);
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                kernel.as_slice().as_ptr(),
                k as isize,
                1,
                cols.as_ptr(),
                n as isize,
                1,
                0.0,
                out.as_mut_slice().as_mut_ptr(),
                n as isize,
                1,
            );
        }
        if let Some(bias) = bias {
            for (co, &b) in bias.as_slice().iter().enumerate() {
                out.frontal_mut(co).iter_mut().for_each(|v| *v += b);
            }
        }
        out
    }

    /// Returns `(d_input, d_kernel, d_bias)`.
    pub fn backward(
        &self,
        cols: &[f64],
        kernel: &DenseTensor,
        grad: &DenseTensor,
    ) -> (DenseTensor, DenseTensor, DenseTensor) {
        let (m, k, n) = (self.out.n3, self.rows(), self.pixels());
        let g = grad.as_slice();
        let mut dkernel = DenseTensor::zeros(kernel.shape());
        let mut dcols = vec![0.0; k * n];
        unsafe {
            // dK = G * cols^T
            matrixmultiply::dgemm(
                m,
                n,
                k,
                1.0,
                g.as_ptr(),
                n as isize,
                1,
                cols.as_ptr(),
                1,
                n as isize,
                0.0,
                dkernel.as_mut_slice().as_mut_ptr(),
                k as isize,
                1,
            );
            // dcols = K^T * G
            matrixmultiply::dgemm(
                k,
                m,
                n,
                1.0,
                kernel.as_slice().as_ptr(),
                1,
                k as isize,
                g.as_ptr(),
                n as isize,
                1,
                0.0,
                dcols.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        let dbias = DenseTensor::from_fn((1, 1, m), |_, _, co| grad.frontal(co).iter().sum());
        (self.col2im(&dcols), dkernel, dbias)
    }
}
