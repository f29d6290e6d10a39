use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Shape};

use super::seeded_rng;

/// Which half of the representation a parameter belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamGroup {
    /// Latent generator parameters (theta).
    Generator,
    /// Tube-wise transform parameters (xi).
    Transform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// Named trainable tensors plus the seeded generator used to initialize them.
#[derive(Clone, Debug)]
pub struct ParameterStore {
    names: Vec<String>,
    groups: Vec<ParamGroup>,
    values: Vec<DenseTensor>,
    index: HashMap<String, usize>,
    rng: ChaCha8Rng,
}

/// Tape handles for every parameter of a store, valid for one tape.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl ParameterStore {
    /// Parameter initialization draws from stream 1 of the seeded ChaCha
    /// generator (stream 0 is reserved for the input noise).
    pub fn new(seed: u64) -> Self {
        ParameterStore {
            names: vec![],
            groups: vec![],
            values: vec![],
            index: HashMap::new(),
            rng: seeded_rng(seed, 1),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, group: ParamGroup, value: DenseTensor) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name:?}")));
        }
        self.index.insert(name.clone(), self.values.len());
        self.names.push(name);
        self.groups.push(group);
        self.values.push(value);
        Ok(ParamId(self.values.len() - 1))
    }

    /// Uniform on `[-b, b]` with `b = sqrt(6 / fan_in)`.
    pub fn he_uniform(&mut self, shape: impl Into<Shape>, fan_in: usize) -> DenseTensor {
        let bound = (6.0 / fan_in as f64).sqrt();
        let rng = &mut self.rng;
        DenseTensor::from_fn(shape, |_, _, _| rng.random_range(-bound..=bound))
    }

    pub fn add_he_uniform(
        &mut self,
        name: impl Into<String>,
        group: ParamGroup,
        shape: impl Into<Shape>,
        fan_in: usize,
    ) -> Result<ParamId> {
        let value = self.he_uniform(shape, fan_in);
        self.add(name, group, value)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &DenseTensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut DenseTensor {
        &mut self.values[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn group(&self, id: ParamId) -> ParamGroup {
        self.groups[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn values(&self) -> &[DenseTensor] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [DenseTensor] {
        &mut self.values
    }

    /// Number of scalar entries in `group`.
    pub fn scalar_count(&self, group: ParamGroup) -> usize {
        self.values.iter().zip(&self.groups).filter(|(_, g)| **g == group).map(|(v, _)| v.len()).sum()
    }

    /// Records every parameter as a trainable leaf.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound { vars: self.values.iter().map(|v| tape.leaf(v.clone())).collect() }
    }
}
