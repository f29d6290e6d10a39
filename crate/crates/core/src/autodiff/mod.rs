//! Tape-based reverse-mode automatic differentiation over [`DenseTensor`]s.
//!
//! Every primitive records its output on an append-only [`Tape`] together with
//! whatever it needs for its vector-Jacobian product. [`Tape::backward`] walks
//! the tape once in reverse order and accumulates gradients by summation over
//! all paths. A tape is single-threaded; independent tapes may run
//! concurrently.

mod conv;
mod gradcheck;
mod suite;

use crate::error::{dim_err, Error, Result};
use crate::tensor::{DenseTensor, Shape};

use conv::ConvPlan;

pub use conv::Conv2dSpec;
pub use gradcheck::{grad_check, GradCheckReport};
pub use suite::{primitive_suite, PrimitiveCheck};

/// Default negative slope of [`Tape::leaky_relu`].
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    ScalarMul(Var, f64),
    Hadamard(Var, Var),
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Option<Var>,
        spec: Conv2dSpec,
        cols: Vec<f64>,
    },
    Upsample2x(Var),
    Concat(Vec<Var>),
    ChannelSlice {
        input: Var,
        start: usize,
    },
    Crop {
        input: Var,
        off1: usize,
        off2: usize,
    },
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    Mode3Linear {
        input: Var,
        weight: Var,
        bias: Option<Var>,
    },
    Facewise(Var, Var),
    SumSquares(Var),
    /// Holds `m * m * (x - o)`.
    MaskedSqError {
        input: Var,
        weighted_residual: DenseTensor,
    },
}

impl Op {
    fn tag(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::ScalarMul(..) => "scalar_mul",
            Op::Hadamard(..) => "hadamard",
            Op::Conv2d { .. } => "conv2d",
            Op::Upsample2x(_) => "upsample_nearest",
            Op::Concat(_) => "channel_concat",
            Op::ChannelSlice { .. } => "channel_slice",
            Op::Crop { .. } => "crop",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Sigmoid(_) => "sigmoid",
            Op::Mode3Linear { .. } => "mode3_linear",
            Op::Facewise(..) => "facewise_matmul",
            Op::SumSquares(_) => "reduce_sum_squares",
            Op::MaskedSqError { .. } => "masked_sq_error",
        }
    }

    fn parents(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Hadamard(a, b) | Op::Facewise(a, b) => vec![*a, *b],
            Op::ScalarMul(a, _) | Op::Upsample2x(a) | Op::LeakyRelu(a, _) | Op::Sigmoid(a) | Op::SumSquares(a) => {
                vec![*a]
            }
            Op::ChannelSlice { input, .. } | Op::Crop { input, .. } | Op::MaskedSqError { input, .. } => vec![*input],
            Op::Conv2d { input, kernel, bias, .. } => {
                let mut p = vec![*input, *kernel];
                p.extend(bias);
                p
            }
            Op::Mode3Linear { input, weight, bias } => {
                let mut p = vec![*input, *weight];
                p.extend(bias);
                p
            }
            Op::Concat(parts) => parts.clone(),
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: DenseTensor,
    requires_grad: bool,
}

/// Append-only record of a differentiable computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<DenseTensor>>,
    shapes: Vec<Shape>,
}

impl Gradients {
    /// Gradient of `v`, or `None` if the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&DenseTensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`; a zero tensor when the loss does not reach it.
    pub fn grad(&self, v: Var) -> DenseTensor {
        self.get(v).cloned().unwrap_or_else(|| DenseTensor::zeros(self.shapes[v.0]))
    }

    pub fn take(&mut self, v: Var) -> DenseTensor {
        self.grads[v.0].take().unwrap_or_else(|| DenseTensor::zeros(self.shapes[v.0]))
    }
}

fn same_shape(a: &DenseTensor, b: &DenseTensor, op: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return dim_err(format!("{op}: {} vs {}", a.shape(), b.shape()));
    }
    Ok(())
}

fn accumulate(slot: &mut Option<DenseTensor>, contrib: DenseTensor) {
    match slot {
        Some(g) => g.as_mut_slice().iter_mut().zip(contrib.as_slice()).for_each(|(a, b)| *a += b),
        None => *slot = Some(contrib),
    }
}

/// Transposed product helpers on raw column-major buffers.
fn gemm(
    (m, k, n): (usize, usize, usize),
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: DenseTensor) -> Var {
        let requires_grad = op.parents().iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node { op, value, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// Trainable input.
    pub fn leaf(&mut self, value: DenseTensor) -> Var {
        self.nodes.push(Node { op: Op::Leaf, value, requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Input that receives no gradient.
    pub fn constant(&mut self, value: DenseTensor) -> Var {
        self.nodes.push(Node { op: Op::Leaf, value, requires_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &DenseTensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Primitive tag of the node behind `v`.
    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.tag()
    }

    pub fn parents(&self, v: Var) -> Vec<Var> {
        self.nodes[v.0].op.parents()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn scalar_mul(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).scale(s);
        self.push(Op::ScalarMul(a, s), value)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        Ok(self.push(Op::Hadamard(a, b), value))
    }

    /// 2D convolution applied across frontal slices (channels).
    ///
    /// `input` is `n1 x n2 x c_in`, `kernel` is `(k*k) x c_in x c_out` with the
    /// spatial tap `(di, dj)` at row `dj * k + di`, `bias` is `1 x 1 x c_out`.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Option<Var>, spec: Conv2dSpec) -> Result<Var> {
        let plan = ConvPlan::new(spec, self.shape(input), self.shape(kernel), bias.map(|b| self.shape(b)))?;
        let cols = plan.im2col(self.value(input));
        let value = plan.forward(&cols, self.value(kernel), bias.map(|b| self.value(b)));
        Ok(self.push(Op::Conv2d { input, kernel, bias, spec, cols }, value))
    }

    /// Nearest-neighbour upsampling by 2 along modes 1 and 2.
    pub fn upsample_nearest(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let s = x.shape();
        let value = DenseTensor::from_fn((2 * s.n1, 2 * s.n2, s.n3), |i, j, c| x.get(i / 2, j / 2, c));
        self.push(Op::Upsample2x(a), value)
    }

    /// Concatenation along mode 3.
    pub fn channel_concat(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return dim_err("channel_concat needs at least one input");
        };
        let s0 = self.shape(first);
        let mut depth = 0;
        let mut data = Vec::new();
        for &p in parts {
            let s = self.shape(p);
            if (s.n1, s.n2) != (s0.n1, s0.n2) {
                return dim_err(format!("channel_concat of {s0} and {s}"));
            }
            depth += s.n3;
            data.extend_from_slice(self.value(p).as_slice());
        }
        let value = DenseTensor::from_vec((s0.n1, s0.n2, depth), data)?;
        Ok(self.push(Op::Concat(parts.to_vec()), value))
    }

    /// Frontal slices `start..start + len`.
    pub fn channel_slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(a);
        if len == 0 || start + len > s.n3 {
            return dim_err(format!("channel_slice {start}..{} of {s}", start + len));
        }
        let p = s.slice_len();
        let data = self.value(a).as_slice()[start * p..(start + len) * p].to_vec();
        let value = DenseTensor::from_vec((s.n1, s.n2, len), data)?;
        Ok(self.push(Op::ChannelSlice { input: a, start }, value))
    }

    /// Spatial window `[off1, off1 + len1) x [off2, off2 + len2)` of every slice.
    pub fn crop(&mut self, a: Var, off1: usize, off2: usize, len1: usize, len2: usize) -> Result<Var> {
        let s = self.shape(a);
        if len1 == 0 || len2 == 0 || off1 + len1 > s.n1 || off2 + len2 > s.n2 {
            return dim_err(format!("crop of {len1}x{len2} at ({off1},{off2}) from {s}"));
        }
        let x = self.value(a);
        let value = DenseTensor::from_fn((len1, len2, s.n3), |i, j, c| x.get(i + off1, j + off2, c));
        Ok(self.push(Op::Crop { input: a, off1, off2 }, value))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(Op::LeakyRelu(a, slope), value)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(Op::Sigmoid(a), value)
    }

    /// Tube-wise affine map: `input x_3 weight` plus a per-output-slice bias.
    ///
    /// `weight` is `c_out x c_in x 1` (a matrix), `bias` is `1 x 1 x c_out`.
    pub fn mode3_linear(&mut self, input: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let s = self.shape(input);
        let w = self.shape(weight);
        if w.n3 != 1 || w.n2 != s.n3 {
            return dim_err(format!("mode3_linear weight {w} against input {s}"));
        }
        if let Some(b) = bias {
            if self.shape(b) != Shape::new(1, 1, w.n1) {
                return dim_err(format!("mode3_linear bias {} must be 1x1x{}", self.shape(b), w.n1));
            }
        }
        let p = s.slice_len();
        let mut value = DenseTensor::zeros((s.n1, s.n2, w.n1));
        gemm(
            (w.n1, s.n3, p),
            self.value(weight).as_slice(),
            (1, w.n1),
            self.value(input).as_slice(),
            (p, 1),
            value.as_mut_slice(),
            (p, 1),
        );
        if let Some(b) = bias {
            for (c, &bv) in self.value(b).as_slice().iter().enumerate() {
                value.frontal_mut(c).iter_mut().for_each(|v| *v += bv);
            }
        }
        Ok(self.push(Op::Mode3Linear { input, weight, bias }, value))
    }

    /// Face-wise product `x^(k) y^(k)` for every frontal slice.
    pub fn facewise_matmul(&mut self, x: Var, y: Var) -> Result<Var> {
        let value = crate::tensor::facewise_product(self.value(x), self.value(y))?;
        Ok(self.push(Op::Facewise(x, y), value))
    }

    /// Scalar `sum(a^2)`.
    pub fn reduce_sum_squares(&mut self, a: Var) -> Var {
        let v = self.value(a).as_slice().iter().map(|x| x * x).sum();
        self.push(Op::SumSquares(a), DenseTensor::scalar(v))
    }

    /// Scalar `||m ⊙ (x - o)||_F^2` with constant observation `o` and mask `m`.
    pub fn masked_sq_error(&mut self, x: Var, observed: &DenseTensor, mask: &DenseTensor) -> Result<Var> {
        let xv = self.value(x);
        same_shape(xv, observed, "masked_sq_error observation")?;
        same_shape(xv, mask, "masked_sq_error mask")?;
        let mut loss = 0.0;
        let mut weighted = DenseTensor::zeros(xv.shape());
        for (((w, &xi), &oi), &mi) in
            weighted.as_mut_slice().iter_mut().zip(xv.as_slice()).zip(observed.as_slice()).zip(mask.as_slice())
        {
            let r = mi * (xi - oi);
            loss += r * r;
            *w = mi * r;
        }
        Ok(self.push(Op::MaskedSqError { input: x, weighted_residual: weighted }, DenseTensor::scalar(loss)))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.shape(loss);
        if shape != Shape::scalar() {
            return Err(Error::Contract(format!("backward needs a 1x1x1 loss, got {shape}")));
        }
        let mut grads: Vec<Option<DenseTensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(DenseTensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].as_ref() else { continue };
            for (parent, contrib) in self.vjp(node, g) {
                if self.nodes[parent.0].requires_grad {
                    debug_assert_eq!(contrib.shape(), self.shape(parent));
                    accumulate(&mut grads[parent.0], contrib);
                }
            }
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn vjp(&self, node: &Node, g: &DenseTensor) -> Vec<(Var, DenseTensor)> {
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => vec![],
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::Sub(a, b) => vec![(*a, g.clone()), (*b, g.scale(-1.0))],
            Op::ScalarMul(a, s) => vec![(*a, g.scale(*s))],
            Op::Hadamard(a, b) => vec![
                (*a, g.zip_map(val(*b), |gi, bi| gi * bi).expect("shape checked")),
                (*b, g.zip_map(val(*a), |gi, ai| gi * ai).expect("shape checked")),
            ],
            Op::Conv2d { input, kernel, bias, spec, cols } => {
                let plan = ConvPlan::new(*spec, self.shape(*input), self.shape(*kernel), None)
                    .expect("validated at record time");
                let (dx, dk, db) = plan.backward(cols, val(*kernel), g);
                let mut out = vec![(*input, dx), (*kernel, dk)];
                out.extend(bias.map(|b| (b, db)));
                out
            }
            Op::Upsample2x(a) => {
                let s = self.shape(*a);
                let mut dx = DenseTensor::zeros(s);
                let gs = g.shape();
                for c in 0..gs.n3 {
                    for j in 0..gs.n2 {
                        for i in 0..gs.n1 {
                            let o = s.offset(i / 2, j / 2, c);
                            dx.as_mut_slice()[o] += g.get(i, j, c);
                        }
                    }
                }
                vec![(*a, dx)]
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                parts
                    .iter()
                    .map(|&p| {
                        let s = self.shape(p);
                        let chunk = g.as_slice()[offset..offset + s.len()].to_vec();
                        offset += s.len();
                        (p, DenseTensor::from_vec(s, chunk).expect("sizes match"))
                    })
                    .collect()
            }
            Op::ChannelSlice { input, start } => {
                let s = self.shape(*input);
                let mut dx = DenseTensor::zeros(s);
                let from = start * s.slice_len();
                dx.as_mut_slice()[from..from + g.len()].copy_from_slice(g.as_slice());
                vec![(*input, dx)]
            }
            Op::Crop { input, off1, off2 } => {
                let mut dx = DenseTensor::zeros(self.shape(*input));
                let gs = g.shape();
                for c in 0..gs.n3 {
                    for j in 0..gs.n2 {
                        for i in 0..gs.n1 {
                            dx.set(i + off1, j + off2, c, g.get(i, j, c));
                        }
                    }
                }
                vec![(*input, dx)]
            }
            Op::LeakyRelu(a, slope) => {
                let dx = g.zip_map(val(*a), |gi, xi| if xi > 0.0 { gi } else { slope * gi }).expect("shape checked");
                vec![(*a, dx)]
            }
            Op::Sigmoid(a) => {
                let dx = g.zip_map(&node.value, |gi, y| gi * y * (1.0 - y)).expect("shape checked");
                vec![(*a, dx)]
            }
            Op::Mode3Linear { input, weight, bias } => {
                let s = self.shape(*input);
                let w = self.shape(*weight);
                let p = s.slice_len();
                let mut dw = DenseTensor::zeros(w);
                let mut dx = DenseTensor::zeros(s);
                // dW = G * X^T, dX = W^T * G
                gemm(
                    (w.n1, p, s.n3),
                    g.as_slice(),
                    (p, 1),
                    val(*input).as_slice(),
                    (1, p),
                    dw.as_mut_slice(),
                    (1, w.n1),
                );
                gemm(
                    (s.n3, w.n1, p),
                    val(*weight).as_slice(),
                    (w.n1, 1),
                    g.as_slice(),
                    (p, 1),
                    dx.as_mut_slice(),
                    (p, 1),
                );
                let mut out = vec![(*input, dx), (*weight, dw)];
                if let Some(b) = bias {
                    let db = DenseTensor::from_fn((1, 1, w.n1), |_, _, c| g.frontal(c).iter().sum());
                    out.push((*b, db));
                }
                out
            }
            Op::Facewise(x, y) => {
                let (xs, ys) = (self.shape(*x), self.shape(*y));
                let mut dx = DenseTensor::zeros(xs);
                let mut dy = DenseTensor::zeros(ys);
                let (m, k, n) = (xs.n1, xs.n2, ys.n2);
                for s in 0..xs.n3 {
                    // dX = G Y^T, dY = X^T G
                    gemm((m, n, k), g.frontal(s), (1, m), val(*y).frontal(s), (k, 1), dx.frontal_mut(s), (1, m));
                    gemm((k, m, n), val(*x).frontal(s), (m, 1), g.frontal(s), (1, m), dy.frontal_mut(s), (1, k));
                }
                vec![(*x, dx), (*y, dy)]
            }
            Op::SumSquares(a) => {
                let gs = 2.0 * g.as_slice()[0];
                vec![(*a, val(*a).scale(gs))]
            }
            Op::MaskedSqError { input, weighted_residual } => {
                let gs = 2.0 * g.as_slice()[0];
                vec![(*input, weighted_residual.scale(gs))]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: (usize, usize, usize), rng: &mut ChaCha8Rng) -> DenseTensor {
        DenseTensor::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn leaky_relu_and_sigmoid_values() {
        let mut tape = Tape::new();
        let x = tape.constant(DenseTensor::from_vec((2, 1, 1), vec![-1.0, 2.0]).unwrap());
        let y = tape.leaky_relu(x, DEFAULT_LEAKY_SLOPE);
        assert_eq!(tape.value(y).as_slice(), &[-0.01, 2.0]);
        let z = tape.constant(DenseTensor::scalar(0.0));
        let s = tape.sigmoid(z);
        assert_eq!(tape.value(s).as_slice(), &[0.5]);
    }

    #[test]
    fn identity_kernel_leaves_input_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let input = random((5, 4, 3), &mut rng);
        let spec = Conv2dSpec::new(1, 1, 0);
        let kernel = DenseTensor::from_fn(spec.kernel_shape(3, 3), |_, ci, co| if ci == co { 1.0 } else { 0.0 });
        let mut tape = Tape::new();
        let x = tape.constant(input.clone());
        let k = tape.constant(kernel);
        let y = tape.conv2d(x, k, None, spec).unwrap();
        assert_eq!(tape.value(y), &input);
    }

    #[test]
    fn sum_squares_gradient_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xv = random((3, 2, 2), &mut rng);
        let mut tape = Tape::new();
        let x = tape.leaf(xv.clone());
        let loss = tape.reduce_sum_squares(x);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.grad(x), xv.scale(2.0));
    }

    #[test]
    fn disconnected_leaf_gets_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(DenseTensor::filled((2, 2, 1), 1.0));
        let unused = tape.leaf(DenseTensor::filled((3, 1, 2), 1.0));
        let loss = tape.reduce_sum_squares(x);
        let grads = tape.backward(loss).unwrap();
        assert!(grads.get(unused).is_none());
        assert_eq!(grads.grad(unused), DenseTensor::zeros((3, 1, 2)));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new();
        let x = tape.leaf(DenseTensor::zeros((2, 1, 1)));
        assert!(matches!(tape.backward(x), Err(Error::Contract(_))));
    }

    #[test]
    fn shape_errors_at_record_time() {
        let mut tape = Tape::new();
        let a = tape.leaf(DenseTensor::zeros((2, 2, 1)));
        let b = tape.leaf(DenseTensor::zeros((2, 3, 1)));
        assert!(tape.add(a, b).is_err());
        assert!(tape.hadamard(a, b).is_err());
        assert!(tape.facewise_matmul(b, a).is_err());
        assert!(tape.channel_slice(a, 0, 2).is_err());
        let w = tape.leaf(DenseTensor::zeros((3, 2, 1)));
        assert!(tape.mode3_linear(a, w, None).is_err());
    }

    #[test]
    fn masked_error_closed_forms() {
        let o = DenseTensor::filled((2, 2, 1), 0.5);
        let mut mask = DenseTensor::zeros((2, 2, 1));
        mask.set(1, 0, 0, 1.0);
        let mut xv = o.clone();
        xv.set(1, 0, 0, 0.75);
        xv.set(0, 1, 0, 3.0);
        let mut tape = Tape::new();
        let x = tape.leaf(xv);
        let loss = tape.masked_sq_error(x, &o, &mask).unwrap();
        assert_eq!(tape.value(loss).as_slice()[0], 0.0625);
        let g = tape.backward(loss).unwrap().grad(x);
        let mut expected = DenseTensor::zeros((2, 2, 1));
        expected.set(1, 0, 0, 0.5);
        assert_eq!(g, expected);

        let mut tape = Tape::new();
        let x = tape.leaf(o.clone());
        let loss = tape.masked_sq_error(x, &o, &mask).unwrap();
        assert_eq!(tape.value(loss).as_slice()[0], 0.0);

        let zero_mask = DenseTensor::zeros((2, 2, 1));
        let mut tape = Tape::new();
        let x = tape.leaf(DenseTensor::filled((2, 2, 1), 9.0));
        let loss = tape.masked_sq_error(x, &o, &zero_mask).unwrap();
        assert_eq!(tape.value(loss).as_slice()[0], 0.0);
        assert_eq!(tape.backward(loss).unwrap().grad(x), zero_mask);
    }

    #[test]
    fn tape_records_parents_in_order() {
        let mut tape = Tape::new();
        let a = tape.leaf(DenseTensor::zeros((1, 1, 2)));
        let b = tape.constant(DenseTensor::zeros((1, 1, 2)));
        let c = tape.add(a, b).unwrap();
        assert_eq!(tape.parents(c), vec![a, b]);
        assert!(tape.parents(c).iter().all(|p| p < &c));
        assert_eq!(tape.op_name(c), "add");
        assert!(tape.requires_grad(c) && !tape.requires_grad(b));
    }
}
