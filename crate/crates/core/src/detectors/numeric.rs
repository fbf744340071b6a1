use super::{rayleigh_log_integral, DetectorMetric, LikelihoodModel};
use crate::channel::{Constellation, FadingSpec, Features};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendreRule;

/// Settings of the numerical likelihood integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes in the fading magnitude.
    pub node_count: usize,
    /// Density tail mass that may be cut off.
    pub tail_epsilon: f64,
    /// Gauss–Legendre nodes over the scale of a Rayleigh mixture.
    pub scale_mixture_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            node_count: 96,
            tail_epsilon: 1e-12,
            scale_mixture_nodes: 32,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 16 {
            return Err(Error::config("quadrature.node_count", "must be at least 16"));
        }
        if self.scale_mixture_nodes < 16 {
            return Err(Error::config("quadrature.scale_mixture_nodes", "must be at least 16"));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1.0) {
            return Err(Error::config("quadrature.tail_epsilon", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Half-width, in standard deviations, that leaves at most
    /// `tail_epsilon` of a Gaussian-dominated tail outside.
    fn tail_sigmas(&self) -> f64 {
        (2.0 * (1.0 / self.tail_epsilon).ln()).sqrt()
    }
}

/// A density of the fading magnitude usable by [`NumericMap`].
pub trait AmplitudeDensity: Sync {
    fn ln_pdf(&self, alpha: f64) -> f64;

    /// An interval in `α` holding all but a negligible share of the mass of
    /// `exp(α z - α² e)·p(α)`.
    fn integration_window(&self, z: f64, e: f64, tail_sigmas: f64) -> (f64, f64);
}

/// Rayleigh or uniform-scale Rayleigh-mixture density. The mixture is
/// integrated over the scale with a Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct FadingDensity {
    spec: FadingSpec,
    scale_nodes: Vec<(f64, f64)>,
}

fn ln_rayleigh(alpha: f64, sigma: f64) -> f64 {
    if alpha <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let s2 = sigma * sigma;
    alpha.ln() - s2.ln() - alpha * alpha / (2.0 * s2)
}

impl FadingDensity {
    pub fn new(spec: FadingSpec, q: &QuadratureConfig) -> Result<Self> {
        spec.validate()?;
        let scale_nodes = match spec {
            FadingSpec::RayleighFixed { .. } => Vec::new(),
            FadingSpec::RayleighUniformScale { lo, hi } => {
                let rule = GaussLegendreRule::new(q.scale_mixture_nodes)?;
                // fold the 1/(hi - lo) of the uniform scale prior into the weights
                rule.mapped(lo, hi).map(|(s, w)| (s, (w / (hi - lo)).ln())).collect()
            }
        };
        Ok(FadingDensity { spec, scale_nodes })
    }

    pub fn spec(&self) -> &FadingSpec {
        &self.spec
    }
}

impl AmplitudeDensity for FadingDensity {
    fn ln_pdf(&self, alpha: f64) -> f64 {
        match self.spec {
            FadingSpec::RayleighFixed { sigma } => ln_rayleigh(alpha, sigma),
            FadingSpec::RayleighUniformScale { .. } => {
                if alpha <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let peak = self
                    .scale_nodes
                    .iter()
                    .map(|&(s, lw)| lw + ln_rayleigh(alpha, s))
                    .fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = self
                    .scale_nodes
                    .iter()
                    .map(|&(s, lw)| (lw + ln_rayleigh(alpha, s) - peak).exp())
                    .sum();
                peak + sum.ln()
            }
        }
    }

    fn integration_window(&self, z: f64, e: f64, tail_sigmas: f64) -> (f64, f64) {
        // Each Rayleigh(σ) component gives the strictly concave log-integrand
        // α z - a α² + ln α with a = e + 1/(2σ²); its curvature is at least
        // 2a, so the mass sits within tail_sigmas/sqrt(2a) of the mode
        // (z + sqrt(z² + 8a)) / (4a). The mode falls as a grows. The window
        // follows the integrand rather than the prior alone: for a weak
        // candidate point the likelihood peak can sit well past the prior's
        // tail cut.
        let (s_lo, s_hi) = self.spec.scale_bounds();
        let a_of = |s: f64| e + 1.0 / (2.0 * s * s);
        let mode = |a: f64| 2.0 / ((z * z + 8.0 * a).sqrt() - z);
        let (a_max, a_min) = (a_of(s_lo), a_of(s_hi));
        let half = tail_sigmas / (2.0 * a_min).sqrt();
        let hi = mode(a_min) + half;
        let lo = (mode(a_max) - half).max(0.0).min((hi - half).max(0.0));
        (lo, hi)
    }
}

/// MAP likelihood evaluated by Gauss–Legendre quadrature in the fading
/// magnitude, for any [`AmplitudeDensity`].
#[derive(Debug, Clone)]
pub struct NumericMap<D> {
    density: D,
    rule: GaussLegendreRule,
    tail_sigmas: f64,
}

impl<D: AmplitudeDensity> NumericMap<D> {
    pub fn with_density(density: D, q: &QuadratureConfig) -> Result<Self> {
        q.validate()?;
        Ok(NumericMap {
            density,
            rule: GaussLegendreRule::new(q.node_count)?,
            tail_sigmas: q.tail_sigmas(),
        })
    }

    pub fn density(&self) -> &D {
        &self.density
    }
}

impl NumericMap<FadingDensity> {
    pub fn new(spec: FadingSpec, q: &QuadratureConfig) -> Result<Self> {
        Self::with_density(FadingDensity::new(spec, q)?, q)
    }
}

impl<D: AmplitudeDensity> LikelihoodModel for NumericMap<D> {
    fn log_likelihood(&self, z: f64, e: f64) -> f64 {
        let (lo, hi) = self.density.integration_window(z, e, self.tail_sigmas);
        self.rule
            .log_integrate(lo, hi, |a| a * z - a * a * e + self.density.ln_pdf(a))
    }
}

/// `ln ∫_0^∞ exp(α z_m - α² e_m) p(α) dα` for every message, by quadrature.
pub fn numeric_map_metric(
    features: &Features,
    c: &Constellation,
    spec: &FadingSpec,
    q: &QuadratureConfig,
) -> Result<DetectorMetric> {
    NumericMap::new(*spec, q)?.metric(features, c)
}

/// MAP likelihood for a uniform mixture of Rayleigh scales, integrating the
/// closed-form Rayleigh likelihood over the scale. Equals
/// [`NumericMap`] on the same spec by exchanging the two integrals, and is
/// orders of magnitude cheaper.
#[derive(Debug, Clone)]
pub struct ScaleMixtureMap {
    nodes: Vec<(f64, f64)>,
}

impl ScaleMixtureMap {
    pub fn new(spec: FadingSpec, q: &QuadratureConfig) -> Result<Self> {
        spec.validate()?;
        q.validate()?;
        let nodes = match spec {
            FadingSpec::RayleighFixed { sigma } => vec![(sigma, 0.0)],
            FadingSpec::RayleighUniformScale { lo, hi } => GaussLegendreRule::new(q.scale_mixture_nodes)?
                .mapped(lo, hi)
                .map(|(s, w)| (s, (w / (hi - lo)).ln()))
                .collect(),
        };
        Ok(ScaleMixtureMap { nodes })
    }
}

impl LikelihoodModel for ScaleMixtureMap {
    fn log_likelihood(&self, z: f64, e: f64) -> f64 {
        let mut buf = [0.0f64; 256];
        let n = self.nodes.len().min(buf.len());
        let mut peak = f64::NEG_INFINITY;
        for (slot, &(s, lw)) in buf.iter_mut().zip(&self.nodes) {
            *slot = lw + rayleigh_log_integral(z, e, s);
            peak = peak.max(*slot);
        }
        if !peak.is_finite() {
            return peak;
        }
        peak + buf[..n].iter().map(|&l| (l - peak).exp()).sum::<f64>().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_fading, Constellation};
    use crate::detectors::{map_detect, rayleigh_map_metric};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_features(rng: &mut ChaCha8Rng, c: &Constellation, spec: &FadingSpec) -> Features {
        let m = rng.random_range(0..c.order());
        let h = draw_fading(rng, spec);
        let r = crate::channel::apply_channel(c.points()[m], &h, rng);
        crate::channel::derotate_features(r, h.phase)
    }

    #[test]
    fn closed_form_matches_quadrature_values() {
        let q = QuadratureConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(rho, sigma) in &[(5.0, 1.0), (12.5, 0.5), (10.0, 1.5)] {
            let c = Constellation::qam16(rho).unwrap();
            let spec = FadingSpec::rayleigh(sigma).unwrap();
            let nm = NumericMap::new(spec, &q).unwrap();
            for _ in 0..500 {
                let f = random_features(&mut rng, &c, &spec);
                let closed = rayleigh_map_metric(&f, &c, sigma).unwrap();
                let num = nm.metric(&f, &c).unwrap();
                let diffs: Vec<f64> = closed.values.iter().zip(&num.values).map(|(a, b)| a - b).collect();
                let spread = diffs.iter().cloned().fold(f64::MIN, f64::max)
                    - diffs.iter().cloned().fold(f64::MAX, f64::min);
                assert!(spread < 1e-6, "spread {spread}");
                assert!(diffs[0].abs() < 1e-6, "offset {}", diffs[0]);
            }
        }
    }

    #[test]
    fn node_doubling_is_stable() {
        let q64 = QuadratureConfig { node_count: 64, ..Default::default() };
        let q128 = QuadratureConfig { node_count: 128, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for spec in [FadingSpec::rayleigh(1.0).unwrap(), FadingSpec::uniform_scale(0.5, 1.5).unwrap()] {
            let (a, b) = (NumericMap::new(spec, &q64).unwrap(), NumericMap::new(spec, &q128).unwrap());
            for &rho in &[5.0, 12.5] {
                let c = Constellation::qam16(rho).unwrap();
                for _ in 0..200 {
                    let f = random_features(&mut rng, &c, &spec);
                    let (va, vb) = (a.metric(&f, &c).unwrap(), b.metric(&f, &c).unwrap());
                    for (x, y) in va.values.iter().zip(&vb.values) {
                        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn mixture_density_matches_closed_form() {
        // ∫_lo^hi Rayleigh(α; σ) dσ = sqrt(2π) [Φ(α/lo) - Φ(α/hi)]
        let phi = |x: f64| 1.0 - crate::special::qfunc(x);
        let d = FadingDensity::new(FadingSpec::uniform_scale(0.5, 1.5).unwrap(), &QuadratureConfig::default())
            .unwrap();
        for i in 1..200 {
            let a = i as f64 * 0.05;
            let exact = (2.0 * PI).sqrt() * (phi(a / 0.5) - phi(a / 1.5));
            let got = d.ln_pdf(a).exp();
            assert!((got - exact).abs() < 1e-10 * exact.max(1e-300) + 1e-15, "a={a}: {got} vs {exact}");
        }
    }

    #[test]
    fn scale_mixture_route_matches_alpha_quadrature() {
        let q = QuadratureConfig::default();
        let spec = FadingSpec::uniform_scale(0.5, 1.5).unwrap();
        let alpha = NumericMap::new(spec, &q).unwrap();
        let sigma = ScaleMixtureMap::new(spec, &q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &rho in &[5.0, 10.0, 12.5] {
            let c = Constellation::qam16(rho).unwrap();
            for _ in 0..300 {
                let f = random_features(&mut rng, &c, &spec);
                let (a, s) = (alpha.metric(&f, &c).unwrap(), sigma.metric(&f, &c).unwrap());
                for (x, y) in a.values.iter().zip(&s.values) {
                    assert!((x - y).abs() < 1e-7, "{x} vs {y}");
                }
                assert_eq!(map_detect(&a), map_detect(&s));
            }
        }
    }

    /// Truncated normal magnitude: nearly deterministic fading.
    struct Narrow {
        center: f64,
        sd: f64,
    }

    impl AmplitudeDensity for Narrow {
        fn ln_pdf(&self, a: f64) -> f64 {
            if a <= 0.0 {
                f64::NEG_INFINITY
            } else {
                -0.5 * ((a - self.center) / self.sd).powi(2)
            }
        }

        fn integration_window(&self, _: f64, _: f64, k: f64) -> (f64, f64) {
            ((self.center - k * self.sd).max(0.0), self.center + k * self.sd)
        }
    }

    #[test]
    fn narrow_density_reduces_to_coherent_detection() {
        let q = QuadratureConfig::default();
        let c = Constellation::qam16(10.0).unwrap();
        let alpha0 = 1.2;
        let nm = NumericMap::with_density(Narrow { center: alpha0, sd: 0.01 }, &q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let (mut agree, n) = (0, 5000);
        for _ in 0..n {
            let m = rng.random_range(0..16);
            let h = crate::channel::ChannelDraw::new(alpha0, 2.0 * PI * rng.random::<f64>());
            let r = crate::channel::apply_channel(c.points()[m], &h, &mut rng);
            let f = crate::channel::derotate_features(r, h.phase);
            let map = map_detect(&nm.metric(&f, &c).unwrap());
            let md = crate::detectors::min_distance_detect(r, &h, &c);
            agree += usize::from(map == md);
        }
        assert!(agree as f64 / n as f64 > 0.995, "agreement {agree}/{n}");
    }

    #[test]
    fn fast_decision_matches_full_argmax() {
        let q = QuadratureConfig::default();
        let spec = FadingSpec::uniform_scale(0.5, 1.5).unwrap();
        let model = ScaleMixtureMap::new(spec, &q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for &rho in &[5.0, 12.5] {
            let c = Constellation::qam16(rho).unwrap();
            for _ in 0..5000 {
                let f = random_features(&mut rng, &c, &spec);
                assert_eq!(model.decide(&f, &c).unwrap(), map_detect(&model.metric(&f, &c).unwrap()));
            }
        }
        // exact ties resolve to the lowest index in both paths
        let c = Constellation::qam16(10.0).unwrap();
        let f = [0.0, 0.0];
        assert_eq!(model.decide(&f, &c).unwrap(), map_detect(&model.metric(&f, &c).unwrap()));
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = QuadratureConfig { node_count: 8, ..Default::default() };
        assert!(NumericMap::new(FadingSpec::rayleigh(1.0).unwrap(), &bad).is_err());
    }
}
