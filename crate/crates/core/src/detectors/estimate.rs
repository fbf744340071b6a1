use crate::channel::{Constellation, PilotDataset};
use crate::error::{Error, Result};

/// Rayleigh-scale ML estimate from one user's pilots.
///
/// Each pilot gives the plug-in channel estimate `ĥ_i = r_i / x_i`; the
/// Rayleigh ML estimate from magnitudes is `σ̂² = Σ|ĥ_i|² / (2N)`. Noise
/// biases it upward by `mean(1/(2 e_m))`.
pub fn estimate_scale_ml(d: &PilotDataset, c: &Constellation) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::input(format!("user {}: empty dataset", d.user_id)));
    }
    let mut acc = 0.0;
    for rec in &d.records {
        let x = c.gray_map(rec.msg)?;
        let e = x.norm_sqr();
        if e == 0.0 {
            return Err(Error::input(format!("pilot message {} has zero energy", rec.msg)));
        }
        acc += rec.received.norm_sqr() / e;
    }
    Ok((acc / (2.0 * d.len() as f64)).sqrt())
}

/// `σ̂ = sqrt(mean(σ̂_u²))`.
pub fn aggregate_scales(scales: &[f64]) -> Result<f64> {
    if scales.is_empty() {
        return Err(Error::input("no per-user scale estimates to aggregate"));
    }
    Ok((scales.iter().map(|s| s * s).sum::<f64>() / scales.len() as f64).sqrt())
}
