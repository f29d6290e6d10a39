use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// `clamp(v, 0, 1) * 255` rounded half up; NaN maps to 0.
pub fn to_byte(v: f64) -> u8 {
    let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (c * 255.0 + 0.5).floor() as u8
}

/// Binary PPM (P6) bytes with bands `(r, g, b)` as channels; image rows are
/// the first tensor index.
pub fn encode_ppm(t: &DenseTensor, bands: [usize; 3]) -> Result<Vec<u8>> {
    let s = t.shape();
    if let Some(&b) = bands.iter().find(|&&b| b >= s.n3) {
        return Err(Error::Config(format!("band {b} out of range for {} bands", s.n3)));
    }
    let mut out = format!("P6\n{} {}\n255\n", s.n2, s.n1).into_bytes();
    out.reserve(3 * s.slice_len());
    for i in 0..s.n1 {
        for j in 0..s.n2 {
            out.extend(bands.iter().map(|&b| to_byte(t.get(i, j, b))));
        }
    }
    Ok(out)
}

pub fn export_image(t: &DenseTensor, bands: [usize; 3], path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_ppm(t, bands)?;
    fs::write(path, bytes)?;
    Ok(())
}
