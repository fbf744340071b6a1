use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square Gray-labelled QAM.
///
/// Message index `m` *is* the bit label: the upper `k = log2(M)/2` bits are
/// the Gray code of the in-phase level, the lower `k` bits that of the
/// quadrature level. Level `j` of an axis sits at `2j - (sqrt(M) - 1)` on
/// the unscaled lattice, so label `0…0` is the `(-3, -3)` corner for 16QAM.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_axis: u32,
    amp_scale: f64,
    points: Vec<Complex64>,
    energies: Vec<f64>,
    energy_classes: Vec<Vec<usize>>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 1 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Mean energy of the unscaled square lattice, `2(M-1)/3` (10 for 16QAM).
pub fn lattice_energy(order: usize) -> f64 {
    2.0 * (order as f64 - 1.0) / 3.0
}

/// Amplitude scale giving `E_s = 10^(rho_db/10)·log2(M)` on top of unit
/// noise variance.
pub fn scale_for_snr(rho_db: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !rho_db.is_finite() {
        return Err(Error::input(format!("SNR must be finite, got {rho_db}")));
    }
    let es = 10f64.powf(rho_db / 10.0) * (order as f64).log2();
    Ok((es / lattice_energy(order)).sqrt())
}

fn check_order(order: usize) -> Result<()> {
    let ok = order >= 4 && order.is_power_of_two() && order.trailing_zeros().is_multiple_of(2);
    if ok {
        Ok(())
    } else {
        Err(Error::input(format!("QAM order must be a power of 4, got {order}")))
    }
}

impl Constellation {
    pub fn new(order: usize, amp_scale: f64) -> Result<Self> {
        check_order(order)?;
        if !(amp_scale > 0.0 && amp_scale.is_finite()) {
            return Err(Error::input(format!("amplitude scale must be positive, got {amp_scale}")));
        }
        let bits_per_axis = order.trailing_zeros() / 2;
        let side = 1usize << bits_per_axis;
        let mask = side - 1;
        let level = |g: usize| (2 * gray_decode(g)) as f64 - (side - 1) as f64;

        let mut points = Vec::with_capacity(order);
        let mut raw_energy = Vec::with_capacity(order);
        for m in 0..order {
            let (i, q) = (level(m >> bits_per_axis), level(m & mask));
            points.push(Complex64::new(i * amp_scale, q * amp_scale));
            raw_energy.push((i * i + q * q) as u64);
        }
        let energies = points.iter().map(|p| p.norm_sqr()).collect();

        let mut levels: Vec<u64> = raw_energy.clone();
        levels.sort_unstable();
        levels.dedup();
        let energy_classes = levels
            .iter()
            .map(|&lvl| (0..order).filter(|&m| raw_energy[m] == lvl).collect())
            .collect();

        Ok(Constellation {
            order,
            bits_per_axis,
            amp_scale,
            points,
            energies,
            energy_classes,
        })
    }

    /// Default 16QAM scaled for `rho_db` SNR per bit.
    pub fn qam16(rho_db: f64) -> Result<Self> {
        Self::for_snr(16, rho_db)
    }

    pub fn for_snr(order: usize, rho_db: f64) -> Result<Self> {
        Self::new(order, scale_for_snr(rho_db, order)?)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        2 * self.bits_per_axis
    }

    pub fn amp_scale(&self) -> f64 {
        self.amp_scale
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// `e_m = |x_m|²`.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Message indices grouped by equal symbol energy, ascending energy;
    /// indices ascend within each group.
    pub fn energy_classes(&self) -> &[Vec<usize>] {
        &self.energy_classes
    }

    pub fn bit_label(&self, m: usize) -> u32 {
        m as u32
    }

    pub fn bit_errors(&self, sent: usize, detected: usize) -> u32 {
        (self.bit_label(sent) ^ self.bit_label(detected)).count_ones()
    }

    pub fn gray_map(&self, m: usize) -> Result<Complex64> {
        self.points
            .get(m)
            .copied()
            .ok_or_else(|| Error::input(format!("message {m} outside [0, {})", self.order)))
    }

    pub fn mean_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.order as f64
    }
}

/// Free-function form of [`Constellation::gray_map`].
pub fn gray_map(m: usize, c: &Constellation) -> Result<Complex64> {
    c.gray_map(m)
}
