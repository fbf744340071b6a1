//! Gauss–Legendre rules with log-domain accumulation.

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendreRule {
    pairs: Vec<(f64, f64)>,
}

impl GaussLegendreRule {
    pub fn new(nodes: usize) -> Result<Self> {
        let rule = GaussLegendre::new(nodes)
            .map_err(|_| Error::input(format!("quadrature needs at least 2 nodes, got {nodes}")))?;
        Ok(GaussLegendreRule {
            pairs: rule.into_node_weight_pairs(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]` (weights include the Jacobian).
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.pairs.iter().map(move |&(x, w)| (mid + half * x, w * half))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// `ln ∫_a^b exp(ln_f(x)) dx`, evaluated with the maximum log-integrand
    /// factored out so that neither overflow nor underflow occurs.
    ///
    /// Returns `-inf` when every node has `ln_f = -inf`.
    pub fn log_integrate(&self, a: f64, b: f64, mut ln_f: impl FnMut(f64) -> f64) -> f64 {
        let mut buf = [0.0f64; 512];
        let mut heap;
        let logs: &mut [f64] = if self.pairs.len() <= buf.len() {
            &mut buf[..self.pairs.len()]
        } else {
            heap = vec![0.0; self.pairs.len()];
            &mut heap
        };
        let mut peak = f64::NEG_INFINITY;
        for ((x, w), slot) in self.mapped(a, b).zip(logs.iter_mut()) {
            *slot = ln_f(x) + w.ln();
            peak = peak.max(*slot);
        }
        if peak == f64::NEG_INFINITY || peak.is_nan() {
            return peak;
        }
        peak + logs.iter().map(|&l| (l - peak).exp()).sum::<f64>().ln()
    }
}
