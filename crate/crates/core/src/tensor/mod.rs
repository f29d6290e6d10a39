//! Dense order-3 tensors and the t-product algebra built on them.
//!
//! Storage is slice-major with column-major frontal slices: element
//! `(i1, i2, i3)` (zero-based) lives at `i3 * n1 * n2 + i2 * n1 + i1`. With this
//! layout frontal slice `k` is the contiguous range `k * n1 * n2 ..`, and the
//! mode-3 unfolding is the same buffer read as a row-major `n3 x n1n2` matrix.

mod fft;
mod ops;
mod svd;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Result};

pub use fft::{dft_matrix, dft_mode3, idft_mode3, inverse_dft_matrix};
pub use ops::{
    facewise_product, facewise_product_complex, hadamard, mode3_fold, mode3_product, mode3_product_complex,
    mode3_unfold, t_product, IMAG_RESIDUE_TOL,
};
pub use svd::{slice_svd, tubal_rank, SliceSvd, DEFAULT_TUBAL_TOL};

/// Real matrix type used for unfoldings and mode-3 factors.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Complex matrix type used for Fourier-domain slices.
pub type CMatrix = nalgebra::DMatrix<Complex64>;

/// Dimensions `(n1, n2, n3)` of an order-3 tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

impl Shape {
    pub const fn new(n1: usize, n2: usize, n3: usize) -> Self {
        Shape { n1, n2, n3 }
    }

    pub const fn scalar() -> Self {
        Shape::new(1, 1, 1)
    }

    /// Total number of entries.
    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of entries in one frontal slice.
    pub fn slice_len(&self) -> usize {
        self.n1 * self.n2
    }

    #[inline]
    pub fn offset(&self, i1: usize, i2: usize, i3: usize) -> usize {
        debug_assert!(i1 < self.n1 && i2 < self.n2 && i3 < self.n3);
        i3 * self.n1 * self.n2 + i2 * self.n1 + i1
    }

    /// Inverse of [`Shape::offset`].
    pub fn index(&self, offset: usize) -> (usize, usize, usize) {
        let s = self.slice_len();
        (offset % self.n1, (offset % s) / self.n1, offset / s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.n3 == 0 {
            return dim_err(format!("all dims must be positive, got {self}"));
        }
        Ok(())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.n1, self.n2, self.n3)
    }
}

impl From<(usize, usize, usize)> for Shape {
    fn from((n1, n2, n3): (usize, usize, usize)) -> Self {
        Shape::new(n1, n2, n3)
    }
}

macro_rules! tensor_type {
    ($name:ident, $elem:ty, $zero:expr) => {
        impl $name {
            /// Builds a tensor from a buffer in the canonical layout.
            pub fn from_vec(shape: impl Into<Shape>, data: Vec<$elem>) -> Result<Self> {
                let shape = shape.into();
                shape.validate()?;
                if data.len() != shape.len() {
                    return dim_err(format!("buffer of length {} does not match shape {shape}", data.len()));
                }
                Ok($name { shape, data })
            }

            /// All-zero tensor. Panics if any dim is zero.
            pub fn zeros(shape: impl Into<Shape>) -> Self {
                let shape = shape.into();
                shape.validate().expect("tensor dims must be positive");
                $name { shape, data: vec![$zero; shape.len()] }
            }

            pub fn from_fn(shape: impl Into<Shape>, mut f: impl FnMut(usize, usize, usize) -> $elem) -> Self {
                let mut t = Self::zeros(shape);
                let s = t.shape;
                for i3 in 0..s.n3 {
                    for i2 in 0..s.n2 {
                        for i1 in 0..s.n1 {
                            t.data[s.offset(i1, i2, i3)] = f(i1, i2, i3);
                        }
                    }
                }
                t
            }

            pub fn shape(&self) -> Shape {
                self.shape
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn as_slice(&self) -> &[$elem] {
                &self.data
            }

            pub fn as_mut_slice(&mut self) -> &mut [$elem] {
                &mut self.data
            }

            pub fn into_vec(self) -> Vec<$elem> {
                self.data
            }

            #[inline]
            pub fn get(&self, i1: usize, i2: usize, i3: usize) -> $elem {
                self.data[self.shape.offset(i1, i2, i3)]
            }

            #[inline]
            pub fn set(&mut self, i1: usize, i2: usize, i3: usize, v: $elem) {
                let o = self.shape.offset(i1, i2, i3);
                self.data[o] = v;
            }

            /// Frontal slice `k` as a column-major buffer.
            pub fn frontal(&self, k: usize) -> &[$elem] {
                let s = self.shape.slice_len();
                &self.data[k * s..(k + 1) * s]
            }

            pub fn frontal_mut(&mut self, k: usize) -> &mut [$elem] {
                let s = self.shape.slice_len();
                &mut self.data[k * s..(k + 1) * s]
            }

            pub(crate) fn ensure_same_shape(&self, other: &Self, what: &str) -> Result<()> {
                if self.shape != other.shape {
                    return dim_err(format!("{what}: {} vs {}", self.shape, other.shape));
                }
                Ok(())
            }
        }
    };
}

/// Real order-3 tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

/// Complex order-3 tensor, typically the mode-3 DFT of a [`DenseTensor`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor {
    shape: Shape,
    data: Vec<Complex64>,
}

tensor_type!(DenseTensor, f64, 0.0);
tensor_type!(ComplexTensor, Complex64, Complex64::new(0.0, 0.0));

impl DenseTensor {
    pub fn filled(shape: impl Into<Shape>, value: f64) -> Self {
        let mut t = Self::zeros(shape);
        t.data.fill(value);
        t
    }

    pub fn scalar(value: f64) -> Self {
        DenseTensor { shape: Shape::scalar(), data: vec![value] }
    }

    /// Tensor whose every frontal slice is the `n x n` identity.
    pub fn slice_identity(n: usize, n3: usize) -> Self {
        Self::from_fn((n, n, n3), |i, j, _| if i == j { 1.0 } else { 0.0 })
    }

    /// Tube-identity of the t-product: first frontal slice `I`, the rest zero.
    pub fn tube_identity(n: usize, n3: usize) -> Self {
        Self::from_fn((n, n, n3), |i, j, k| if i == j && k == 0 { 1.0 } else { 0.0 })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseTensor { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other, "elementwise op")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(DenseTensor { shape: self.shape, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `sqrt(sum of squares)`, summed in storage order.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `||self - other||_F / ||other||_F` (absolute error when `other` is zero).
    pub fn relative_error(&self, reference: &Self) -> Result<f64> {
        let diff = self.sub(reference)?.frobenius_norm();
        let base = reference.frobenius_norm();
        Ok(if base > 0.0 { diff / base } else { diff })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_complex(&self) -> ComplexTensor {
        ComplexTensor { shape: self.shape, data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    /// Frontal slice `k` as an `n1 x n2` matrix.
    pub fn slice_matrix(&self, k: usize) -> Matrix {
        Matrix::from_column_slice(self.shape.n1, self.shape.n2, self.frontal(k))
    }

    /// Stacks equally shaped matrices as frontal slices.
    pub fn from_slices(slices: &[Matrix]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return dim_err("no slices given");
        };
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for m in slices {
            if m.shape() != (n1, n2) {
                return dim_err("frontal slices differ in shape");
            }
            data.extend_from_slice(m.as_slice());
        }
        Self::from_vec((n1, n2, slices.len()), data)
    }
}

impl ComplexTensor {
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real part together with the largest absolute imaginary component.
    pub fn split_real(&self) -> (DenseTensor, f64) {
        let residue = self.data.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        let real = DenseTensor { shape: self.shape, data: self.data.iter().map(|v| v.re).collect() };
        (real, residue)
    }

    pub fn slice_matrix(&self, k: usize) -> CMatrix {
        CMatrix::from_column_slice(self.shape.n1, self.shape.n2, self.frontal(k))
    }

    pub fn from_slices(slices: &[CMatrix]) -> Result<Self> {
        let Some(first) = slices.first() else {
            return dim_err("no slices given");
        };
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for m in slices {
            if m.shape() != (n1, n2) {
                return dim_err("frontal slices differ in shape");
            }
            data.extend_from_slice(m.as_slice());
        }
        Self::from_vec((n1, n2, slices.len()), data)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other, "complex subtraction")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(ComplexTensor { shape: self.shape, data })
    }

    /// Packs real and imaginary parts as one real tensor of depth `2 n3`
    /// (real parts in slices `0..n3`, imaginary parts in `n3..2n3`).
    pub fn to_packed(&self) -> DenseTensor {
        let mut data: Vec<f64> = self.data.iter().map(|v| v.re).collect();
        data.extend(self.data.iter().map(|v| v.im));
        let s = self.shape;
        DenseTensor { shape: Shape::new(s.n1, s.n2, 2 * s.n3), data }
    }

    /// Inverse of [`ComplexTensor::to_packed`].
    pub fn from_packed(packed: &DenseTensor) -> Result<Self> {
        let s = packed.shape();
        if !s.n3.is_multiple_of(2) {
            return dim_err(format!("packed complex tensor needs even depth, got {s}"));
        }
        let half = packed.len() / 2;
        let (re, im) = packed.as_slice().split_at(half);
        let data = re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        Self::from_vec((s.n1, s.n2, s.n3 / 2), data)
    }
}
