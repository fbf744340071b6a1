use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// Distribution of the fading magnitude `|h|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingSpec {
    /// Rayleigh with fixed scale `sigma`.
    RayleighFixed { sigma: f64 },
    /// Rayleigh whose scale is uniform on `[lo, hi]`.
    RayleighUniformScale { lo: f64, hi: f64 },
}

impl FadingSpec {
    pub fn rayleigh(sigma: f64) -> Result<Self> {
        let spec = FadingSpec::RayleighFixed { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform_scale(lo: f64, hi: f64) -> Result<Self> {
        let spec = FadingSpec::RayleighUniformScale { lo, hi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingSpec::RayleighFixed { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            FadingSpec::RayleighFixed { sigma } => {
                Err(Error::input(format!("Rayleigh scale must be positive, got {sigma}")))
            }
            FadingSpec::RayleighUniformScale { lo, hi } if lo > 0.0 && lo < hi && hi.is_finite() => Ok(()),
            FadingSpec::RayleighUniformScale { lo, hi } => Err(Error::input(format!(
                "scale range needs 0 < lo < hi, got [{lo}, {hi}]"
            ))),
        }
    }

    /// Range of Rayleigh scales covered by the spec.
    pub fn scale_bounds(&self) -> (f64, f64) {
        match *self {
            FadingSpec::RayleighFixed { sigma } => (sigma, sigma),
            FadingSpec::RayleighUniformScale { lo, hi } => (lo, hi),
        }
    }
}

/// One realization `h = alpha·e^{j·phase}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub magnitude: f64,
    pub phase: f64,
}

impl ChannelDraw {
    pub fn new(magnitude: f64, phase: f64) -> Self {
        ChannelDraw { magnitude, phase }
    }
}

/// Inverse-CDF Rayleigh sample.
pub fn rayleigh_sample<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    let u: f64 = rng.random();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// Draws one fading realization with uniform phase.
///
/// For [`FadingSpec::RayleighUniformScale`] a fresh scale is drawn for this
/// symbol. Per-user heterogeneity instead draws scales once with
/// [`draw_user_scales`] and then uses `RayleighFixed(sigma_u)` per symbol.
pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R, spec: &FadingSpec) -> ChannelDraw {
    let sigma = match *spec {
        FadingSpec::RayleighFixed { sigma } => sigma,
        FadingSpec::RayleighUniformScale { lo, hi } => rng.random_range(lo..=hi),
    };
    let magnitude = rayleigh_sample(rng, sigma);
    let phase = 2.0 * PI * rng.random::<f64>();
    ChannelDraw { magnitude, phase }
}

/// Per-user Rayleigh scales: independent uniform draws on the spec's range,
/// or the fixed scale repeated.
pub fn draw_user_scales<R: Rng + ?Sized>(users: usize, spec: &FadingSpec, rng: &mut R) -> Result<Vec<f64>> {
    if users == 0 {
        return Err(Error::input("need at least one user"));
    }
    spec.validate()?;
    Ok(match *spec {
        FadingSpec::RayleighFixed { sigma } => vec![sigma; users],
        FadingSpec::RayleighUniformScale { lo, hi } => (0..users).map(|_| rng.random_range(lo..=hi)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rayleigh_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let spec = FadingSpec::rayleigh(1.0).unwrap();
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        let mut phase_ok = true;
        for _ in 0..n {
            let d = draw_fading(&mut rng, &spec);
            let a2 = d.magnitude * d.magnitude;
            s1 += d.magnitude;
            s2 += a2;
            s4 += a2 * a2;
            phase_ok &= (0.0..2.0 * PI).contains(&d.phase);
        }
        assert!(phase_ok);
        let nf = n as f64;
        // E[a] = sqrt(pi/2), Var[a] = (4 - pi)/2
        let se1 = ((4.0 - PI) / 2.0 / nf).sqrt();
        assert!((s1 / nf - (PI / 2.0).sqrt()).abs() < 3.0 * se1);
        // E[a²] = 2, Var[a²] = E[a^4] - 4 = 8 - 4
        let se2 = (4.0 / nf).sqrt();
        assert!((s2 / nf - 2.0).abs() < 5.0 * se2);
        assert!((s4 / nf - 8.0).abs() < 0.2);
    }

    #[test]
    fn rayleigh_median() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut v: Vec<f64> = (0..200_001).map(|_| rayleigh_sample(&mut rng, 1.0)).collect();
        v.sort_by(f64::total_cmp);
        let median = v[100_000];
        let expected = (2.0 * 2f64.ln()).sqrt();
        assert!((expected - 1.1774).abs() < 1e-4);
        assert!((median - expected).abs() < 0.01);
    }

    #[test]
    fn user_scales_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = FadingSpec::uniform_scale(0.5, 1.5).unwrap();
        let n = 100_000;
        let s = draw_user_scales(n, &spec, &mut rng).unwrap();
        assert!(s.iter().all(|x| (0.5..=1.5).contains(x)));
        let mean = s.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (12.0 * n as f64).sqrt());
        assert!(draw_user_scales(0, &spec, &mut rng).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(FadingSpec::uniform_scale(1.0, 1.0).is_err());
        assert!(FadingSpec::uniform_scale(0.0, 1.0).is_err());
        assert!(FadingSpec::rayleigh(0.0).is_err());
        assert!(FadingSpec::rayleigh(f64::NAN).is_err());
    }
}
