//! Modulation, fading, noise and the pilot datasets built from them.
//!
//! The link runs at symbol rate: each message is one complex sample
//! `r = h·x_m + w` with `w ~ CN(0, 1)`. SNR enters only through the
//! constellation amplitude (see [`scale_for_snr`]).

mod constellation;
mod dataset;
mod fading;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub use constellation::{gray_map, lattice_energy, scale_for_snr, Constellation};
pub use dataset::{gen_dataset, read_datasets_csv, write_datasets_csv, PilotDataset, PilotRecord};
pub use fading::{draw_fading, draw_user_scales, rayleigh_sample, ChannelDraw, FadingSpec};

/// Baseband sample at symbol rate.
pub type ComplexSample = Complex64;

/// Derotated in-phase / quadrature pair fed to the detectors.
pub type Features = [f64; 2];

/// Total variance of the complex receiver noise.
pub const NOISE_VARIANCE: f64 = 1.0;

/// Circularly-symmetric complex Gaussian noise with [`NOISE_VARIANCE`].
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = (0.5 * NOISE_VARIANCE).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `h·x` without noise.
pub fn apply_fading(x: Complex64, h: &ChannelDraw) -> Complex64 {
    Complex64::from_polar(h.magnitude, h.phase) * x
}

/// `r = h·x + w`.
pub fn apply_channel<R: Rng + ?Sized>(x: Complex64, h: &ChannelDraw, rng: &mut R) -> Complex64 {
    apply_fading(x, h) + complex_noise(rng)
}

/// Real and imaginary parts of `e^{-j·phase}·r`.
///
/// With the phase known, every matched-filter output `Re{e^{-jφ} r x_m*}`
/// is the inner product of this pair with `(Re x_m, Im x_m)`, so the pair is
/// a sufficient statistic for the message.
pub fn derotate_features(r: Complex64, phase: f64) -> Features {
    let d = r * Complex64::from_polar(1.0, -phase);
    [d.re, d.im]
}
