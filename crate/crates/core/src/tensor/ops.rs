use super::{dft_mode3, idft_mode3, CMatrix, ComplexTensor, DenseTensor, Matrix, Shape};
use crate::error::{dim_err, Error, Result};

/// Largest imaginary residue (relative to the result's magnitude, floored at 1)
/// tolerated when a t-product of real tensors is brought back to the real domain.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Mode-3 unfolding: an `n3 x n1n2` matrix with row `i3` holding slice `i3`
/// vectorized column-major.
pub fn mode3_unfold(t: &DenseTensor) -> Matrix {
    let s = t.shape();
    // the buffer is the row-major unfolding
    Matrix::from_row_slice(s.n3, s.slice_len(), t.as_slice())
}

pub fn mode3_fold(m: &Matrix, shape: impl Into<Shape>) -> Result<DenseTensor> {
    let shape = shape.into();
    if m.nrows() != shape.n3 || m.ncols() != shape.slice_len() {
        return dim_err(format!("cannot fold a {}x{} matrix into {shape}", m.nrows(), m.ncols()));
    }
    DenseTensor::from_vec(shape, m.transpose().as_slice().to_vec())
}

/// `t x_3 a`: contracts mode 3 of `t` with the columns of `a` (`J x n3`).
pub fn mode3_product(t: &DenseTensor, a: &Matrix) -> Result<DenseTensor> {
    let s = t.shape();
    if a.ncols() != s.n3 {
        return dim_err(format!("mode-3 product of {s} with a {}x{} matrix", a.nrows(), a.ncols()));
    }
    let p = s.slice_len();
    let j = a.nrows();
    let mut out = DenseTensor::zeros((s.n1, s.n2, j));
    unsafe {
        // out (j x p, row-major) = a (j x n3, column-major) * t (n3 x p, row-major)
        matrixmultiply::dgemm(
            j,
            s.n3,
            p,
            1.0,
            a.as_slice().as_ptr(),
            1,
            j as isize,
            t.as_slice().as_ptr(),
            p as isize,
            1,
            0.0,
            out.as_mut_slice().as_mut_ptr(),
            p as isize,
            1,
        );
    }
    Ok(out)
}

/// Complex counterpart of [`mode3_product`].
pub fn mode3_product_complex(t: &ComplexTensor, a: &CMatrix) -> Result<ComplexTensor> {
    let s = t.shape();
    if a.ncols() != s.n3 {
        return dim_err(format!("mode-3 product of {s} with a {}x{} matrix", a.nrows(), a.ncols()));
    }
    let unfolded = CMatrix::from_row_slice(s.n3, s.slice_len(), t.as_slice());
    let prod = a * unfolded;
    ComplexTensor::from_vec((s.n1, s.n2, a.nrows()), prod.transpose().as_slice().to_vec())
}

fn facewise_shape(x: Shape, y: Shape) -> Result<Shape> {
    if x.n2 != y.n1 || x.n3 != y.n3 {
        return dim_err(format!("face-wise product of {x} and {y}"));
    }
    Ok(Shape::new(x.n1, y.n2, x.n3))
}

/// Face-wise product: slice `k` of the result is `x^(k) y^(k)`.
pub fn facewise_product(x: &DenseTensor, y: &DenseTensor) -> Result<DenseTensor> {
    let out_shape = facewise_shape(x.shape(), y.shape())?;
    let mut out = DenseTensor::zeros(out_shape);
    let (m, k, n) = (out_shape.n1, x.shape().n2, out_shape.n2);
    for s in 0..out_shape.n3 {
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                x.frontal(s).as_ptr(),
                1,
                m as isize,
                y.frontal(s).as_ptr(),
                1,
                k as isize,
                0.0,
                out.frontal_mut(s).as_mut_ptr(),
                1,
                m as isize,
            );
        }
    }
    Ok(out)
}

/// Face-wise product of complex tensors.
pub fn facewise_product_complex(x: &ComplexTensor, y: &ComplexTensor) -> Result<ComplexTensor> {
    let out_shape = facewise_shape(x.shape(), y.shape())?;
    let slices: Vec<CMatrix> = (0..out_shape.n3).map(|k| x.slice_matrix(k) * y.slice_matrix(k)).collect();
    ComplexTensor::from_slices(&slices)
}

/// Tensor-tensor product computed through the mode-3 DFT.
pub fn t_product(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    facewise_shape(a.shape(), b.shape())?;
    let prod = facewise_product_complex(&dft_mode3(a), &dft_mode3(b))?;
    let (real, residue) = idft_mode3(&prod).split_real();
    let scale = real.max_abs().max(1.0);
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(Error::Numerical(format!("t-product left an imaginary residue of {residue:e}")));
    }
    Ok(real)
}

pub fn hadamard(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    a.zip_map(b, |x, y| x * y)
}
