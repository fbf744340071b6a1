//! Gaussian tail functions.

use std::f64::consts::{PI, SQRT_2};

/// Gaussian Q-function, `P(N(0,1) > x)`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // erfc(-x) = 2 - erfc(x)
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 26.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // Above 26 erfc underflows; 1 - sqrt(pi)·x·erfcx(x) is then below 1e-3.
        (1.0 - sqrt_pi_x_erfcx_complement(x)) / (x * PI.sqrt())
    }
}

/// `1 - sqrt(pi)·x·erfcx(x)` for `x > 0` without cancellation at large `x`.
pub fn sqrt_pi_x_erfcx_complement(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 8.0 {
        return 1.0 - PI.sqrt() * x * (x * x).exp() * libm::erfc(x);
    }
    // Asymptotic series: sum_{k>=1} (-1)^(k+1) (2k-1)!! / (2x²)^k.
    // Truncation error is below exp(-x²), i.e. < 1e-27 for x > 8.
    let inv = 1.0 / (2.0 * x * x);
    let mut term = inv;
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        sum += term;
        let next = -term * (2.0 * k + 1.0) * inv;
        if next.abs() >= term.abs() || next.abs() < 1e-18 * sum.abs() {
            break;
        }
        term = next;
        k += 1.0;
    }
    sum
}
