//! Binary parameter files.
//!
//! Layout, all little-endian: 4-byte magic `FRXP`, `u32` version, `u32`
//! layer count, one `u32` per layer width, `u32` parameter count, then the
//! parameters as `f32`.

use std::io::{Read, Write};

use super::{param_count, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"FRXP";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(theta: &ModelParams, mut out: W) -> Result<()> {
    out.write_all(&CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(theta.layer_dims().len() as u32).to_le_bytes())?;
    for &d in theta.layer_dims() {
        out.write_all(&(d as u32).to_le_bytes())?;
    }
    out.write_all(&(theta.len() as u32).to_le_bytes())?;
    for &v in &theta.flat {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<ModelParams> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::input("not a parameter file (bad magic)"));
    }
    let version = read_u32(&mut input)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::input(format!("unsupported parameter file version {version}")));
    }
    let n_layers = read_u32(&mut input)? as usize;
    if !(2..=64).contains(&n_layers) {
        return Err(Error::input(format!("implausible layer count {n_layers}")));
    }
    let dims = (0..n_layers)
        .map(|_| read_u32(&mut input).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let count = read_u32(&mut input)? as usize;
    if count != param_count(&dims) {
        return Err(Error::input(format!(
            "header says {count} parameters, widths {dims:?} need {}",
            param_count(&dims)
        )));
    }
    let flat = (0..count)
        .map(|_| read_u32(&mut input).map(|b| f32::from_bits(b) as f64))
        .collect::<Result<Vec<_>>>()?;
    ModelParams::from_flat(&dims, flat)
}
