//! Model-based symbol detectors.
//!
//! All MAP-style detectors score a message `m` through the pair
//! `(z_m, e_m)`, where `z_m = (2/N0)·Re{e^{-jφ} r x_m*}` is the
//! noise-normalized matched-filter output and `e_m = |x_m|²/N0`. With this
//! normalization the conditional likelihood is, up to an `m`-independent
//! factor, `∫ exp(α z_m - α² e_m) p(α) dα`.

mod coherent;
mod estimate;
mod numeric;
mod rayleigh;

use num_complex::Complex64;

use crate::channel::{ChannelDraw, Constellation, Features, NOISE_VARIANCE};
use crate::error::{Error, Result};

pub use coherent::{min_distance_detect, MinDistanceDetector};
pub use estimate::{aggregate_scales, estimate_scale_ml};
pub use numeric::{
    numeric_map_metric, AmplitudeDensity, FadingDensity, NumericMap, QuadratureConfig, ScaleMixtureMap,
};
pub use rayleigh::{rayleigh_log_integral, rayleigh_map_metric, RayleighMap};

/// Per-message detection scores; larger is more likely.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorMetric {
    pub values: Vec<f64>,
}

/// Index of the largest metric value, lowest index on ties.
pub fn map_detect(metric: &DetectorMetric) -> usize {
    argmax(&metric.values)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Noise-normalized matched-filter statistic `z_m` for one candidate point.
#[inline]
pub fn matched_filter(features: &Features, x: Complex64) -> f64 {
    2.0 / NOISE_VARIANCE * (features[0] * x.re + features[1] * x.im)
}

/// Noise-normalized energy `e_m`.
#[inline]
pub fn normalized_energy(x: Complex64) -> f64 {
    x.norm_sqr() / NOISE_VARIANCE
}

/// A log-likelihood `ln ∫ exp(α z - α² e) p(α) dα` up to a constant that
/// does not depend on `(z, e)`.
///
/// Implementations must be non-decreasing in `z` for fixed `e`; detectors
/// rely on it to prune candidates (see [`LikelihoodModel::decide`]).
pub trait LikelihoodModel: Sync {
    fn log_likelihood(&self, z: f64, e: f64) -> f64;

    fn metric(&self, features: &Features, c: &Constellation) -> Result<DetectorMetric> {
        let values = c
            .points()
            .iter()
            .enumerate()
            .map(|(m, &x)| {
                let v = self.log_likelihood(matched_filter(features, x), normalized_energy(x));
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Numerical(format!(
                        "non-finite metric {v} for message {m} at features {features:?}"
                    )))
                }
            })
            .collect::<Result<_>>()?;
        Ok(DetectorMetric { values })
    }

    /// Same decision as `map_detect(&self.metric(..))`, evaluating the
    /// likelihood once per energy class. Within a class the metric only
    /// depends on `z`, so the class winner is the largest-`z` member.
    fn decide(&self, features: &Features, c: &Constellation) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for class in c.energy_classes() {
            let mut pick = class[0];
            let mut z_pick = matched_filter(features, c.points()[pick]);
            for &m in &class[1..] {
                let z = matched_filter(features, c.points()[m]);
                if z > z_pick {
                    pick = m;
                    z_pick = z;
                }
            }
            let v = self.log_likelihood(z_pick, normalized_energy(c.points()[pick]));
            if !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite metric {v} for message {pick} at features {features:?}"
                )));
            }
            best = match best {
                Some((b, bv)) if bv > v || (bv == v && b < pick) => Some((b, bv)),
                _ => Some((pick, v)),
            };
        }
        Ok(best.map(|(m, _)| m).unwrap_or(0))
    }
}

/// What a receiver sees for one test symbol. `channel` is only consulted by
/// genie-aided detectors; the others use the derotated `features`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub received: Complex64,
    pub channel: ChannelDraw,
    pub features: Features,
}

/// Anything that maps an observation to a message index.
pub trait SymbolDetector: Sync {
    fn detect(&self, obs: &Observation) -> Result<usize>;
}

/// MAP detector over a likelihood model.
#[derive(Debug, Clone)]
pub struct MapDetector<M> {
    pub model: M,
    pub constellation: Constellation,
}

impl<M: LikelihoodModel> MapDetector<M> {
    pub fn new(model: M, constellation: Constellation) -> Self {
        MapDetector { model, constellation }
    }
}

impl<M: LikelihoodModel> SymbolDetector for MapDetector<M> {
    fn detect(&self, obs: &Observation) -> Result<usize> {
        self.model.decide(&obs.features, &self.constellation)
    }
}
