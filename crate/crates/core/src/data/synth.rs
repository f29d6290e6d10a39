use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nets::seeded_rng;
use crate::tensor::{t_product, DenseTensor, Shape};

use super::normalize_bands;

const SYNTH_STREAM: u64 = 3;

/// `G * H` for nonnegative uniform factors `G: n1 x r x n3`,
/// `H: r x n2 x n3`, divided by its largest entry so values lie in `[0, 1]`.
///
/// A single positive scale keeps the tubal rank at `r`; an affine per-band
/// map would not.
pub fn synth_low_tubal_rank(shape: impl Into<Shape>, r: usize, seed: u64) -> Result<DenseTensor> {
    let s = shape.into();
    s.validate()?;
    if r == 0 || r > s.n1.min(s.n2) {
        return Err(Error::Config(format!("tubal rank must lie in 1..={}, got {r}", s.n1.min(s.n2))));
    }
    let mut rng = seeded_rng(seed, SYNTH_STREAM);
    let g = DenseTensor::from_fn((s.n1, r, s.n3), |_, _, _| rng.random::<f64>());
    let h = DenseTensor::from_fn((r, s.n2, s.n3), |_, _, _| rng.random::<f64>());
    let x = t_product(&g, &h)?;
    let peak = x.max_abs();
    Ok(if peak > 0.0 { x.scale(1.0 / peak) } else { x })
}

struct Blob {
    center: (f64, f64),
    /// Inverse squared widths along the rotated axes.
    inv_w: (f64, f64),
    cos_sin: (f64, f64),
    freq: f64,
    phase: f64,
}

impl Blob {
    fn spatial(&self, i: f64, j: f64) -> f64 {
        let (di, dj) = (i - self.center.0, j - self.center.1);
        let (c, s) = self.cos_sin;
        let u = c * di + s * dj;
        let v = -s * di + c * dj;
        (-0.5 * (u * u * self.inv_w.0 + v * v * self.inv_w.1)).exp()
    }

    fn spectral(&self, t: f64) -> f64 {
        0.55 + 0.45 * (PI * self.freq * t + self.phase).cos()
    }
}

/// Sum of rotated anisotropic Gaussian blobs with slowly varying spectral
/// signatures over a smooth background, normalized band by band.
pub fn synth_smooth(shape: impl Into<Shape>, seed: u64) -> Result<DenseTensor> {
    let s = shape.into();
    s.validate()?;
    let mut rng = seeded_rng(seed, SYNTH_STREAM);
    let (n1, n2) = (s.n1 as f64, s.n2 as f64);
    let blobs: Vec<Blob> = (0..6)
        .map(|_| {
            let w1 = rng.random_range(0.12..0.35) * n1;
            let w2 = rng.random_range(0.12..0.35) * n2;
            let angle: f64 = rng.random_range(0.0..PI);
            Blob {
                center: (rng.random_range(0.0..n1), rng.random_range(0.0..n2)),
                inv_w: (1.0 / (w1 * w1), 1.0 / (w2 * w2)),
                cos_sin: (angle.cos(), angle.sin()),
                freq: rng.random_range(0.3..1.5),
                phase: rng.random_range(0.0..2.0 * PI),
            }
        })
        .collect();
    let slope: (f64, f64) = (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
    let t = |k: usize| if s.n3 > 1 { k as f64 / (s.n3 - 1) as f64 } else { 0.0 };
    let x = DenseTensor::from_fn(s, |i, j, k| {
        let (fi, fj) = (i as f64, j as f64);
        let background = 0.2 + slope.0 * fi / n1 + slope.1 * fj / n2 * (1.0 - 0.5 * t(k));
        background + blobs.iter().map(|b| b.spectral(t(k)) * b.spatial(fi, fj)).sum::<f64>()
    });
    Ok(normalize_bands(&x).0)
}
