//! PSNR and SSIM for volumes whose frontal slices are bands in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::tensor::DenseTensor;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// How the volume PSNR is formed from the bands.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean of the per-band PSNR values.
    #[default]
    BandMean,
    /// PSNR of the MSE over the whole volume.
    Volume,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub psnr: Vec<f64>,
    pub mean_psnr: f64,
    pub ssim: Vec<f64>,
    pub mean_ssim: f64,
    pub aggregation: Aggregation,
}

fn check_dims(x: &DenseTensor, reference: &DenseTensor) -> Result<()> {
    if x.shape() != reference.shape() {
        return dim_err(format!("metrics: {} vs reference {}", x.shape(), reference.shape()));
    }
    Ok(())
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// `10 log10(1 / MSE_k)` per band with peak 1; `+inf` for a zero MSE.
pub fn psnr_per_band(x: &DenseTensor, reference: &DenseTensor) -> Result<Vec<f64>> {
    check_dims(x, reference)?;
    Ok((0..x.shape().n3).map(|k| psnr_from_mse(mse(x.frontal(k), reference.frontal(k)))).collect())
}

/// PSNR of the MSE pooled over every entry.
pub fn psnr_volume(x: &DenseTensor, reference: &DenseTensor) -> Result<f64> {
    check_dims(x, reference)?;
    Ok(psnr_from_mse(mse(x.as_slice(), reference.as_slice())))
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable Gaussian filter keeping only fully covered window positions.
/// `img` is column-major `n1 x n2`; the result is `(n1-10) x (n2-10)`.
fn filter_valid(img: &[f64], n1: usize, n2: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (m1, m2) = (n1 + 1 - SSIM_WINDOW, n2 + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; m1 * n2];
    for j in 0..n2 {
        for i in 0..m1 {
            rows[j * m1 + i] = taps.iter().enumerate().map(|(t, w)| w * img[j * n1 + i + t]).sum();
        }
    }
    let mut out = vec![0.0; m1 * m2];
    for j in 0..m2 {
        for i in 0..m1 {
            out[j * m1 + i] = taps.iter().enumerate().map(|(t, w)| w * rows[(j + t) * m1 + i]).sum();
        }
    }
    out
}

fn ssim_band(x: &[f64], y: &[f64], n1: usize, n2: usize, taps: &[f64; SSIM_WINDOW]) -> f64 {
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mu_x = filter_valid(x, n1, n2, taps);
    let mu_y = filter_valid(y, n1, n2, taps);
    let xx = filter_valid(&prod(x, x), n1, n2, taps);
    let yy = filter_valid(&prod(y, y), n1, n2, taps);
    let xy = filter_valid(&prod(x, y), n1, n2, taps);
    let mut total = 0.0;
    for w in 0..mu_x.len() {
        let (mx, my) = (mu_x[w], mu_y[w]);
        let sx = xx[w] - mx * mx;
        let sy = yy[w] - my * my;
        let sxy = xy[w] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2));
    }
    total / mu_x.len() as f64
}

/// Single-scale SSIM per band: 11x11 Gaussian window (sigma 1.5), dynamic
/// range 1, averaged over all fully contained window positions.
pub fn ssim_per_band(x: &DenseTensor, reference: &DenseTensor) -> Result<Vec<f64>> {
    check_dims(x, reference)?;
    let s = x.shape();
    if s.n1 < SSIM_WINDOW || s.n2 < SSIM_WINDOW {
        return Err(Error::Contract(format!("SSIM needs bands of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {s}")));
    }
    let taps = gaussian_taps();
    Ok((0..s.n3).map(|k| ssim_band(x.frontal(k), reference.frontal(k), s.n1, s.n2, &taps)).collect())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-band PSNR and SSIM plus their volume summaries.
pub fn evaluate(x: &DenseTensor, reference: &DenseTensor, aggregation: Aggregation) -> Result<MetricsReport> {
    let psnr = psnr_per_band(x, reference)?;
    let ssim = ssim_per_band(x, reference)?;
    let mean_psnr = match aggregation {
        Aggregation::BandMean => mean(&psnr),
        Aggregation::Volume => psnr_volume(x, reference)?,
    };
    Ok(MetricsReport { mean_psnr, mean_ssim: mean(&ssim), psnr, ssim, aggregation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taps_are_normalized_and_symmetric() {
        let t = gaussian_taps();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..SSIM_WINDOW {
            assert_eq!(t[i], t[SSIM_WINDOW - 1 - i]);
        }
    }

    #[test]
    fn valid_filter_of_a_constant_is_constant() {
        let img = vec![0.25; 13 * 12];
        let out = filter_valid(&img, 13, 12, &gaussian_taps());
        assert_eq!(out.len(), 3 * 2);
        assert!(out.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn small_bands_are_rejected() {
        let x = DenseTensor::zeros((10, 12, 1));
        assert!(matches!(ssim_per_band(&x, &x), Err(Error::Contract(_))));
        assert!(psnr_per_band(&x, &DenseTensor::zeros((10, 12, 2))).is_err());
    }

    #[test]
    fn volume_aggregation_pools_the_mse() {
        let r = DenseTensor::zeros((11, 11, 2));
        let x = DenseTensor::from_fn((11, 11, 2), |_, _, k| if k == 0 { 0.1 } else { 0.0 });
        let rep = evaluate(&x, &r, Aggregation::Volume).unwrap();
        assert!((rep.mean_psnr - 10.0 * 200f64.log10()).abs() < 1e-9);
        assert_eq!(evaluate(&x, &r, Aggregation::BandMean).unwrap().mean_psnr, f64::INFINITY);
    }
}
