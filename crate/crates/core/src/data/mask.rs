use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::seeded_rng;
use crate::tensor::{DenseTensor, Shape};

/// Missing-data pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Individual entries observed uniformly at random.
    Random,
    /// Whole mode-3 tubes observed at uniformly chosen spatial positions.
    Tube,
}

impl std::fmt::Display for MaskMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaskMode::Random => "random",
            MaskMode::Tube => "tube",
        })
    }
}

const MASK_STREAM: u64 = 2;

fn check_rate(sr: f64) -> Result<()> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(Error::Config(format!("sampling rate must lie in (0, 1], got {sr}")));
    }
    Ok(())
}

/// Exactly `round(sr * N)` observed entries, drawn without replacement.
pub fn gen_random_mask(shape: impl Into<Shape>, sr: f64, seed: u64) -> Result<DenseTensor> {
    check_rate(sr)?;
    let shape = shape.into();
    let n = shape.len();
    let count = (sr * n as f64).round() as usize;
    let mut mask = DenseTensor::zeros(shape);
    let mut rng = seeded_rng(seed, MASK_STREAM);
    for i in sample(&mut rng, n, count) {
        mask.as_mut_slice()[i] = 1.0;
    }
    Ok(mask)
}

/// Exactly `round(sr * n1 * n2)` observed tubes.
pub fn gen_tube_mask(shape: impl Into<Shape>, sr: f64, seed: u64) -> Result<DenseTensor> {
    check_rate(sr)?;
    let shape = shape.into();
    let n = shape.slice_len();
    let count = (sr * n as f64).round() as usize;
    let mut mask = DenseTensor::zeros(shape);
    let mut rng = seeded_rng(seed, MASK_STREAM);
    for p in sample(&mut rng, n, count) {
        for k in 0..shape.n3 {
            mask.frontal_mut(k)[p] = 1.0;
        }
    }
    Ok(mask)
}

pub fn gen_mask(mode: MaskMode, shape: impl Into<Shape>, sr: f64, seed: u64) -> Result<DenseTensor> {
    match mode {
        MaskMode::Random => gen_random_mask(shape, sr, seed),
        MaskMode::Tube => gen_tube_mask(shape, sr, seed),
    }
}

/// Errors unless every entry is exactly 0 or 1.
pub fn ensure_binary(mask: &DenseTensor) -> Result<()> {
    match mask.as_slice().iter().position(|&v| v != 0.0 && v != 1.0) {
        Some(i) => Err(Error::Contract(format!("mask entry {i} is {} (must be 0 or 1)", mask.as_slice()[i]))),
        None => Ok(()),
    }
}

/// Fraction of observed entries.
pub fn sampling_rate(mask: &DenseTensor) -> f64 {
    mask.as_slice().iter().filter(|&&v| v == 1.0).count() as f64 / mask.len() as f64
}
