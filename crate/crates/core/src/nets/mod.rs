//! Differentiable maps composing the representation `X = f(g(Z))`.
//!
//! `g` is a latent generator (a U-Net, or a face-wise factor product) and `f`
//! a transform acting on mode-3 tubes (an FCN, the identity, or a fixed
//! inverse DFT). Every map records onto a [`Tape`] using parameters bound from
//! a [`ParameterStore`].

mod facewise;
mod fcn;
mod params;
mod unet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var, DEFAULT_LEAKY_SLOPE};
use crate::error::{dim_err, Result};
use crate::tensor::{inverse_dft_matrix, DenseTensor, Shape};

pub use facewise::{FaceWiseFactorConfig, FacewiseDomain, FacewiseGenerator};
pub use fcn::{Fcn, FcnConfig};
pub use params::{Bound, ParamGroup, ParamId, ParameterStore};
pub use unet::{UNet, UNetConfig};

/// Upper end of the uniform input-noise distribution.
pub const NOISE_SCALE: f64 = 0.1;

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Pointwise nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Sigmoid,
    Identity,
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu { slope: DEFAULT_LEAKY_SLOPE }
    }
}

impl Activation {
    pub fn apply(&self, tape: &mut Tape, x: Var) -> Var {
        match *self {
            Activation::LeakyRelu { slope } => tape.leaky_relu(x, slope),
            Activation::Sigmoid => tape.sigmoid(x),
            Activation::Identity => x,
        }
    }
}

/// A differentiable map between order-3 tensors.
pub trait Module {
    fn forward(&self, tape: &mut Tape, params: &Bound, input: Var) -> Result<Var>;

    /// Output dims for a given input, or a dimension error.
    fn output_shape(&self, input: Shape) -> Result<Shape>;

    /// Spatial dims of the input must be multiples of this.
    fn spatial_multiple(&self) -> usize {
        1
    }
}

/// `f(x) = x`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Module for Identity {
    fn forward(&self, _: &mut Tape, _: &Bound, input: Var) -> Result<Var> {
        Ok(input)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(input)
    }
}

/// Real part of the mode-3 inverse DFT of a packed complex tensor
/// (real parts in slices `0..n3`, imaginary parts in `n3..2n3`).
#[derive(Clone, Debug)]
pub struct InverseDft {
    n3: usize,
    weight: DenseTensor,
}

impl InverseDft {
    pub fn new(n3: usize) -> Self {
        let finv = inverse_dft_matrix(n3);
        // [Re F^-1 | -Im F^-1] as an n3 x 2n3 matrix
        let weight =
            DenseTensor::from_fn(
                (n3, 2 * n3, 1),
                |j, c, _| {
                    if c < n3 {
                        finv[(j, c)].re
                    } else {
                        -finv[(j, c - n3)].im
                    }
                },
            );
        InverseDft { n3, weight }
    }
}

impl Module for InverseDft {
    fn forward(&self, tape: &mut Tape, _: &Bound, input: Var) -> Result<Var> {
        self.output_shape(tape.shape(input))?;
        let w = tape.constant(self.weight.clone());
        tape.mode3_linear(input, w, None)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.n3 != 2 * self.n3 {
            return dim_err(format!("inverse DFT over {} slices got packed input {input}", self.n3));
        }
        Ok(Shape::new(input.n1, input.n2, self.n3))
    }
}

/// Input noise: i.i.d. uniform on `[0, 0.1]`, drawn from stream 0 of `seed`.
pub fn init_noise(shape: impl Into<Shape>, seed: u64) -> DenseTensor {
    let mut rng = seeded_rng(seed, 0);
    DenseTensor::from_fn(shape, |_, _, _| rng.random_range(0.0..=NOISE_SCALE))
}

/// Symmetric zero padding applied to the input before the generator and
/// removed from its output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct SpatialPad {
    before: (usize, usize),
    inner: (usize, usize),
}

/// The composition `X = f(g(Z))` with a fixed input `Z`.
pub struct Representation {
    noise: DenseTensor,
    generator: Box<dyn Module>,
    transform: Box<dyn Module>,
    pad: Option<SpatialPad>,
    output: Shape,
}

impl Representation {
    /// Validates the shape chain `Z -> g -> f`. If `g` requires spatial dims
    /// divisible by some `2^L`, `Z` is zero padded symmetrically and the
    /// generator output cropped back.
    pub fn new(noise: DenseTensor, generator: Box<dyn Module>, transform: Box<dyn Module>) -> Result<Self> {
        let s = noise.shape();
        let mult = generator.spatial_multiple();
        let up = |n: usize| n.div_ceil(mult) * mult;
        let (p1, p2) = (up(s.n1), up(s.n2));
        let (noise, pad) = if (p1, p2) == (s.n1, s.n2) {
            (noise, None)
        } else {
            let before = ((p1 - s.n1) / 2, (p2 - s.n2) / 2);
            let padded = DenseTensor::from_fn((p1, p2, s.n3), |i, j, k| {
                match (i.checked_sub(before.0), j.checked_sub(before.1)) {
                    (Some(a), Some(b)) if a < s.n1 && b < s.n2 => noise.get(a, b, k),
                    _ => 0.0,
                }
            });
            (padded, Some(SpatialPad { before, inner: (s.n1, s.n2) }))
        };
        let latent = generator.output_shape(noise.shape())?;
        let latent = match pad {
            Some(p) => Shape::new(p.inner.0, p.inner.1, latent.n3),
            None => latent,
        };
        let output = transform.output_shape(latent)?;
        Ok(Representation { noise, generator, transform, pad, output })
    }

    pub fn noise(&self) -> &DenseTensor {
        &self.noise
    }

    pub fn output_shape(&self) -> Shape {
        self.output
    }

    /// Latent tensor `g(Z)`.
    pub fn latent(&self, tape: &mut Tape, params: &Bound) -> Result<Var> {
        let z = tape.constant(self.noise.clone());
        let g = self.generator.forward(tape, params, z)?;
        match self.pad {
            Some(SpatialPad { before, inner }) => tape.crop(g, before.0, before.1, inner.0, inner.1),
            None => Ok(g),
        }
    }

    /// `X = f(g(Z))` recorded on `tape`.
    pub fn forward(&self, tape: &mut Tape, params: &Bound) -> Result<Var> {
        let latent = self.latent(tape, params)?;
        self.transform.forward(tape, params, latent)
    }

    /// Forward pass on a scratch tape.
    pub fn evaluate(&self, store: &ParameterStore) -> Result<DenseTensor> {
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let x = self.forward(&mut tape, &bound)?;
        Ok(tape.value(x).clone())
    }
}

/// Evaluates `f(g(Z))` once with the store's current parameters.
pub fn dtr_forward(
    noise: &DenseTensor,
    generator: &dyn Module,
    transform: &dyn Module,
    store: &ParameterStore,
) -> Result<DenseTensor> {
    let mut tape = Tape::new();
    let bound = store.bind(&mut tape);
    let z = tape.constant(noise.clone());
    let latent = generator.forward(&mut tape, &bound, z)?;
    let x = transform.forward(&mut tape, &bound, latent)?;
    Ok(tape.value(x).clone())
}
