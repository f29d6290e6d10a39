use serde::{Deserialize, Serialize};

use super::{Activation, Bound, Module, ParamGroup, ParamId, ParameterStore};
use crate::autodiff::{Tape, Var};
use crate::error::{dim_err, Error, Result};
use crate::tensor::{dft_mode3, DenseTensor, Shape};

/// Where the factor slices live.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacewiseDomain {
    /// Real factors multiplied slice by slice.
    Real,
    /// Complex factors stored packed (real parts in the first half of the
    /// slices, imaginary parts in the second) and multiplied as complex
    /// matrices. Initialized as the mode-3 DFT of real factors.
    Fourier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceWiseFactorConfig {
    /// `r_0 = n2, r_1, ..., r_L = n1`.
    pub ranks: Vec<usize>,
    /// Number of (complex, for [`FacewiseDomain::Fourier`]) frontal slices.
    pub slices: usize,
    pub activation: Activation,
    pub domain: FacewiseDomain,
}

impl FaceWiseFactorConfig {
    /// Rank chain `[n2, inner..., n1]`.
    pub fn chain(n1: usize, n2: usize, inner: &[usize]) -> Vec<usize> {
        let mut ranks = vec![n2];
        ranks.extend_from_slice(inner);
        ranks.push(n1);
        ranks
    }

    pub fn layers(&self) -> usize {
        self.ranks.len().saturating_sub(1)
    }

    fn depth(&self) -> usize {
        match self.domain {
            FacewiseDomain::Real => self.slices,
            FacewiseDomain::Fourier => 2 * self.slices,
        }
    }
}

/// `W_L Δ σ(W_{L-1} Δ ... σ(W_2 Δ W_1 Δ Z))` with `W_m` of dims
/// `r_m x r_{m-1} x n3`. The activation follows `W_2 .. W_{L-1}` only.
pub struct FacewiseGenerator {
    config: FaceWiseFactorConfig,
    weights: Vec<ParamId>,
}

fn complex_facewise(tape: &mut Tape, x: Var, y: Var, n3: usize) -> Result<Var> {
    let xr = tape.channel_slice(x, 0, n3)?;
    let xi = tape.channel_slice(x, n3, n3)?;
    let yr = tape.channel_slice(y, 0, n3)?;
    let yi = tape.channel_slice(y, n3, n3)?;
    let rr = tape.facewise_matmul(xr, yr)?;
    let ii = tape.facewise_matmul(xi, yi)?;
    let ri = tape.facewise_matmul(xr, yi)?;
    let ir = tape.facewise_matmul(xi, yr)?;
    let re = tape.sub(rr, ii)?;
    let im = tape.add(ri, ir)?;
    tape.channel_concat(&[re, im])
}

impl FacewiseGenerator {
    /// Registers `W_1 .. W_L` as `facewise.w{m}` under the generator group.
    pub fn build(config: FaceWiseFactorConfig, store: &mut ParameterStore) -> Result<Self> {
        if config.ranks.len() < 2 || config.ranks.contains(&0) || config.slices == 0 {
            return Err(Error::Config(format!(
                "face-wise generator needs a positive rank chain of length >= 2 and slices > 0, got {:?}",
                config.ranks
            )));
        }
        let n3 = config.slices;
        let mut weights = Vec::with_capacity(config.layers());
        for m in 1..=config.layers() {
            let (rows, cols) = (config.ranks[m], config.ranks[m - 1]);
            let value = match config.domain {
                FacewiseDomain::Real => store.he_uniform((rows, cols, n3), cols),
                FacewiseDomain::Fourier => dft_mode3(&store.he_uniform((rows, cols, n3), cols * n3)).to_packed(),
            };
            weights.push(store.add(format!("facewise.w{m}"), ParamGroup::Generator, value)?);
        }
        Ok(FacewiseGenerator { config, weights })
    }

    pub fn config(&self) -> &FaceWiseFactorConfig {
        &self.config
    }

    /// Parameter handles of `W_1 .. W_L`.
    pub fn weights(&self) -> &[ParamId] {
        &self.weights
    }

    /// The fixed input whose frontal slices are identities (packed for the
    /// Fourier domain: identity real part, zero imaginary part).
    pub fn identity_input(&self) -> DenseTensor {
        let n = self.config.ranks[0];
        let n3 = self.config.slices;
        DenseTensor::from_fn((n, n, self.config.depth()), |i, j, k| if i == j && k < n3 { 1.0 } else { 0.0 })
    }

    fn multiply(&self, tape: &mut Tape, x: Var, y: Var) -> Result<Var> {
        match self.config.domain {
            FacewiseDomain::Real => tape.facewise_matmul(x, y),
            FacewiseDomain::Fourier => complex_facewise(tape, x, y, self.config.slices),
        }
    }
}

impl Module for FacewiseGenerator {
    fn forward(&self, tape: &mut Tape, p: &Bound, input: Var) -> Result<Var> {
        self.output_shape(tape.shape(input))?;
        let layers = self.weights.len();
        let mut h = self.multiply(tape, p.var(self.weights[0]), input)?;
        for (m, &w) in self.weights.iter().enumerate().skip(1) {
            h = self.multiply(tape, p.var(w), h)?;
            // W_{m+1} in 1-based terms; no activation after the outermost factor
            if m + 1 < layers {
                h = self.config.activation.apply(tape, h);
            }
        }
        Ok(h)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        let r0 = self.config.ranks[0];
        let expected = Shape::new(r0, r0, self.config.depth());
        if input != expected {
            return dim_err(format!("face-wise generator expects input {expected}, got {input}"));
        }
        Ok(Shape::new(*self.config.ranks.last().expect("non-empty chain"), r0, self.config.depth()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(ranks: Vec<usize>, activation: Activation) -> FaceWiseFactorConfig {
        FaceWiseFactorConfig { ranks, slices: 3, activation, domain: FacewiseDomain::Real }
    }

    fn run(g: &FacewiseGenerator, store: &ParameterStore) -> DenseTensor {
        let mut tape = Tape::new();
        let bound = store.bind(&mut tape);
        let z = tape.constant(g.identity_input());
        let out = g.forward(&mut tape, &bound, z).unwrap();
        tape.value(out).clone()
    }

    #[test]
    fn two_layers_are_a_plain_slice_product() {
        let mut store = ParameterStore::new(4);
        let g = FacewiseGenerator::build(config(vec![5, 2, 4], Activation::default()), &mut store).unwrap();
        let out = run(&g, &store);
        let (w1, w2) = (store.get(g.weights()[0]), store.get(g.weights()[1]));
        for k in 0..3 {
            let expected = w2.slice_matrix(k) * w1.slice_matrix(k);
            assert!((out.slice_matrix(k) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn three_layers_with_identity_activation() {
        let mut store = ParameterStore::new(5);
        let g = FacewiseGenerator::build(config(vec![4, 3, 2, 5], Activation::Identity), &mut store).unwrap();
        let out = run(&g, &store);
        let w: Vec<_> = g.weights().iter().map(|&id| store.get(id).clone()).collect();
        for k in 0..3 {
            let expected = w[2].slice_matrix(k) * (w[1].slice_matrix(k) * w[0].slice_matrix(k));
            assert!((out.slice_matrix(k) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_factors_give_zero() {
        let mut store = ParameterStore::new(6);
        let g = FacewiseGenerator::build(config(vec![3, 2, 2, 3], Activation::default()), &mut store).unwrap();
        for v in store.values_mut() {
            *v = DenseTensor::zeros(v.shape());
        }
        assert_eq!(run(&g, &store), DenseTensor::zeros((3, 3, 3)));
    }

    #[test]
    fn rejects_bad_chain_and_input() {
        let mut store = ParameterStore::new(0);
        assert!(FacewiseGenerator::build(config(vec![3], Activation::Identity), &mut store).is_err());
        assert!(FacewiseGenerator::build(config(vec![3, 0, 2], Activation::Identity), &mut store).is_err());
        let g = FacewiseGenerator::build(config(vec![3, 2, 4], Activation::Identity), &mut store).unwrap();
        assert!(g.output_shape(Shape::new(4, 4, 3)).is_err());
        assert_eq!(g.output_shape(Shape::new(3, 3, 3)).unwrap(), Shape::new(4, 3, 3));
    }
}
