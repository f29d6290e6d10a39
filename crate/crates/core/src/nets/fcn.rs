use serde::{Deserialize, Serialize};

use super::{Activation, Bound, Module, ParamGroup, ParamId, ParameterStore};
use crate::autodiff::{Tape, Var};
use crate::error::{dim_err, Error, Result};
use crate::tensor::{DenseTensor, Shape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcnConfig {
    /// Number of linear layers.
    pub layers: usize,
    /// `layers - 1` hidden widths; `None` uses `max(in, out)` for each.
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for FcnConfig {
    fn default() -> Self {
        FcnConfig { layers: 2, hidden: None, activation: Activation::default() }
    }
}

impl FcnConfig {
    pub fn widths(&self, input: usize, output: usize) -> Result<Vec<usize>> {
        if self.layers == 0 {
            return Err(Error::Config("FCN needs at least one layer".into()));
        }
        let hidden = match &self.hidden {
            Some(h) if h.len() != self.layers - 1 => {
                return Err(Error::Config(format!(
                    "FCN with {} layers needs {} hidden widths, got {}",
                    self.layers,
                    self.layers - 1,
                    h.len()
                )))
            }
            Some(h) => h.clone(),
            None => vec![input.max(output); self.layers - 1],
        };
        if hidden.contains(&0) {
            return Err(Error::Config("FCN widths must be positive".into()));
        }
        let mut widths = vec![input];
        widths.extend(hidden);
        widths.push(output);
        Ok(widths)
    }
}

/// Fully connected network applied to every mode-3 tube independently.
pub struct Fcn {
    layers: Vec<(ParamId, ParamId)>,
    input: usize,
    output: usize,
    activation: Activation,
}

impl Fcn {
    /// Registers weights (`out x in x 1`) and biases (`1 x 1 x out`) under the
    /// transform group.
    pub fn build(config: &FcnConfig, input: usize, output: usize, store: &mut ParameterStore) -> Result<Self> {
        let widths = config.widths(input, output)?;
        let mut layers = Vec::with_capacity(config.layers);
        for (i, w) in widths.windows(2).enumerate() {
            let weight =
                store.add_he_uniform(format!("fcn.{i}.weight"), ParamGroup::Transform, (w[1], w[0], 1), w[0])?;
            let bias = store.add(format!("fcn.{i}.bias"), ParamGroup::Transform, DenseTensor::zeros((1, 1, w[1])))?;
            layers.push((weight, bias));
        }
        Ok(Fcn { layers, input, output, activation: config.activation })
    }

    pub fn layer_params(&self) -> &[(ParamId, ParamId)] {
        &self.layers
    }
}

impl Module for Fcn {
    fn forward(&self, tape: &mut Tape, p: &Bound, input: Var) -> Result<Var> {
        self.output_shape(tape.shape(input))?;
        let mut h = input;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            h = tape.mode3_linear(h, p.var(w), Some(p.var(b)))?;
            if i + 1 < self.layers.len() {
                h = self.activation.apply(tape, h);
            }
        }
        Ok(h)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.n3 != self.input {
            return dim_err(format!("FCN expects {} input slices, got {input}", self.input));
        }
        Ok(Shape::new(input.n1, input.n2, self.output))
    }
}
