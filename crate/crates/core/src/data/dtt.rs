use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

use super::Tensor4;

pub const MAGIC: &[u8; 4] = b"DTT1";

/// Contents of a `.dtt` file.
#[derive(Clone, Debug, PartialEq)]
pub enum Stored {
    Order3(DenseTensor),
    Order4(Tensor4),
}

impl Stored {
    pub fn order(&self) -> u8 {
        match self {
            Stored::Order3(_) => 3,
            Stored::Order4(_) => 4,
        }
    }

    /// The order-3 view, merging modes 3 and 4 of an order-4 tensor.
    pub fn into_order3(self) -> DenseTensor {
        match self {
            Stored::Order3(t) => t,
            Stored::Order4(t) => t.fold(),
        }
    }
}

/// Serialized bytes: magic, order, little-endian `u32` dims, then `f32`
/// values in storage order.
pub fn encode(dims: &[usize], values: &[f64]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(5 + 4 * dims.len() + 4 * values.len());
    out.extend_from_slice(MAGIC);
    out.push(dims.len() as u8);
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Stored> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing DTT1 magic".into()));
    }
    let order = bytes[4] as usize;
    if order != 3 && order != 4 {
        return Err(Error::Format(format!("unsupported order {order}")));
    }
    let header = 5 + 4 * order;
    if bytes.len() < header {
        return Err(Error::Format("truncated header".into()));
    }
    let dims: Vec<usize> = bytes[5..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4-byte chunk")) as usize)
        .collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(4).map(|b| (n, b)))
        .ok_or_else(|| Error::Format(format!("dims {dims:?} overflow")))?;
    if bytes.len() - header != count.1 {
        return Err(Error::Format(format!(
            "expected {} value bytes for dims {dims:?}, found {}",
            count.1,
            bytes.len() - header
        )));
    }
    let values: Vec<f64> = bytes[header..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
        .collect();
    Ok(match order {
        3 => Stored::Order3(DenseTensor::from_vec((dims[0], dims[1], dims[2]), values)?),
        _ => Stored::Order4(Tensor4::from_vec([dims[0], dims[1], dims[2], dims[3]], values)?),
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

pub fn save_tensor(t: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let s = t.shape();
    write_bytes(path.as_ref(), &encode(&[s.n1, s.n2, s.n3], t.as_slice())?)
}

pub fn save_stored(t: &Stored, path: impl AsRef<Path>) -> Result<()> {
    match t {
        Stored::Order3(t) => save_tensor(t, path),
        Stored::Order4(t) => write_bytes(path.as_ref(), &encode(&t.dims, &t.data)?),
    }
}

pub fn read_dtt(path: impl AsRef<Path>) -> Result<Stored> {
    decode(&fs::read(path)?)
}

/// Loads an order-3 tensor; order-4 files are folded.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    Ok(read_dtt(path)?.into_order3())
}
