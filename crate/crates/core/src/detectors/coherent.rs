use num_complex::Complex64;

use super::{Observation, SymbolDetector};
use crate::channel::{apply_fading, ChannelDraw, Constellation};
use crate::error::Result;

/// Coherent detection with the channel known: nearest faded point,
/// lowest index on ties.
pub fn min_distance_detect(r: Complex64, h: &ChannelDraw, c: &Constellation) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (m, &x) in c.points().iter().enumerate() {
        let d = (r - apply_fading(x, h)).norm_sqr();
        if d < best_d {
            best = m;
            best_d = d;
        }
    }
    best
}

/// Genie-aided [`min_distance_detect`] over test observations.
#[derive(Debug, Clone)]
pub struct MinDistanceDetector {
    pub constellation: Constellation,
}

impl SymbolDetector for MinDistanceDetector {
    fn detect(&self, obs: &Observation) -> Result<usize> {
        Ok(min_distance_detect(obs.received, &obs.channel, &self.constellation))
    }
}
