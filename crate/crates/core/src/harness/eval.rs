//! Monte-Carlo bit-error counting.
//!
//! The test set is cut into fixed-size chunks; chunk `k` draws everything
//! from `TestSymbols` stream `k`. Counts are integers summed over chunks,
//! so the result does not depend on the number of worker threads.

use std::f64::consts::TAU;
use std::ops::AddAssign;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{apply_fading, complex_noise, derotate_features, rayleigh_sample, ChannelDraw, Constellation};
use crate::detectors::{Observation, SymbolDetector};
use crate::error::{Error, Result};
use crate::rng::{Purpose, SeedTree};

/// Fading scale of each test symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFading {
    /// One scale for all symbols.
    Fixed { sigma: f64 },
    /// Consecutive blocks of `block_len` symbols share a scale.
    Blocks { scales: Vec<f64>, block_len: usize },
    /// Every symbol draws its scale uniformly from `[lo, hi]`.
    PerSymbol { lo: f64, hi: f64 },
}

impl TestFading {
    /// `blocks` scales from `TestScales` stream 0, uniform on `[lo, hi]`,
    /// covering `size` symbols.
    pub fn blocks(seeds: &SeedTree, blocks: usize, size: usize, lo: f64, hi: f64) -> Result<Self> {
        if blocks == 0 || size == 0 {
            return Err(Error::input("test stream needs at least one block and one symbol"));
        }
        let mut rng = seeds.rng(Purpose::TestScales, 0, 0);
        let scales = (0..blocks).map(|_| rng.random_range(lo..=hi)).collect();
        Ok(TestFading::Blocks {
            scales,
            block_len: size.div_ceil(blocks),
        })
    }
}

/// Where the test symbols come from.
#[derive(Debug, Clone, PartialEq)]
pub struct TestStream {
    pub seeds: SeedTree,
    pub size: usize,
    pub chunk_size: usize,
    pub fading: TestFading,
    /// Drop the receiver noise (a sanity hook for genie-aided receivers).
    pub noiseless: bool,
}

impl TestStream {
    pub fn new(seeds: SeedTree, size: usize, chunk_size: usize, fading: TestFading) -> Self {
        TestStream {
            seeds,
            size,
            chunk_size,
            fading,
            noiseless: false,
        }
    }

    pub fn chunks(&self) -> usize {
        self.size.div_ceil(self.chunk_size.max(1))
    }

    /// Calls `f(msg, observation)` for every symbol of chunk `k`, in order.
    pub fn for_each_in_chunk(
        &self,
        k: usize,
        c: &Constellation,
        mut f: impl FnMut(usize, &Observation) -> Result<()>,
    ) -> Result<()> {
        let start = k * self.chunk_size;
        let end = (start + self.chunk_size).min(self.size);
        let mut rng = self.seeds.rng(Purpose::TestSymbols, 0, k as u64);
        for i in start..end {
            let msg = rng.random_range(0..c.order());
            let sigma = match &self.fading {
                TestFading::Fixed { sigma } => *sigma,
                TestFading::Blocks { scales, block_len } => scales[(i / block_len).min(scales.len() - 1)],
                TestFading::PerSymbol { lo, hi } => rng.random_range(*lo..=*hi),
            };
            let h = ChannelDraw::new(sigma * rayleigh_sample(&mut rng, 1.0), rng.random_range(0.0..TAU));
            let w = complex_noise(&mut rng);
            let mut received = apply_fading(c.points()[msg], &h);
            if !self.noiseless {
                received += w;
            }
            let obs = Observation {
                received,
                channel: h,
                features: derotate_features(received, h.phase),
            };
            f(msg, &obs)?;
        }
        Ok(())
    }
}

/// Error tallies of one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub bit_errors: u64,
    pub total_bits: u64,
    pub symbol_errors: u64,
    pub symbols: u64,
}

impl EvalCounts {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.total_bits as f64
    }

    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols as f64
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, o: Self) {
        self.bit_errors += o.bit_errors;
        self.total_bits += o.total_bits;
        self.symbol_errors += o.symbol_errors;
        self.symbols += o.symbols;
    }
}

/// Runs `detector` over the test stream and counts Gray-label bit errors.
pub fn ber_evaluate(detector: &dyn SymbolDetector, stream: &TestStream, c: &Constellation) -> Result<EvalCounts> {
    if stream.size == 0 || stream.chunk_size == 0 {
        return Err(Error::input("test stream is empty"));
    }
    let bits = c.bits_per_symbol() as u64;
    let per_chunk: Vec<Result<EvalCounts>> = (0..stream.chunks())
        .into_par_iter()
        .map(|k| {
            let mut n = EvalCounts::default();
            stream.for_each_in_chunk(k, c, |msg, obs| {
                let m_hat = detector.detect(obs)?;
                if m_hat >= c.order() {
                    return Err(Error::Numerical(format!("detector returned index {m_hat}")));
                }
                let e = c.bit_errors(msg, m_hat) as u64;
                n.bit_errors += e;
                n.symbol_errors += (e > 0) as u64;
                n.total_bits += bits;
                n.symbols += 1;
                Ok(())
            })?;
            Ok(n)
        })
        .collect();
    let mut total = EvalCounts::default();
    for r in per_chunk {
        total += r?;
    }
    Ok(total)
}
