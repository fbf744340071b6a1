use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{loss_and_grad, ModelParams, Sample};
use crate::error::{Error, Result};

/// Step size `η_n = eta0 / (1 + decay·n)` for the `n`-th update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdSchedule {
    pub eta0: f64,
    pub decay: f64,
}

impl SgdSchedule {
    pub fn constant(eta: f64) -> Self {
        SgdSchedule { eta0: eta, decay: 0.0 }
    }

    pub fn eta(&self, step: u64) -> f64 {
        self.eta0 / (1.0 + self.decay * step as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd(SgdSchedule),
    Adam(AdamConfig),
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam(AdamConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::default(),
            batch_size: 20,
            epochs: 25,
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be at least 1"));
        }
        match self.optimizer {
            Optimizer::Sgd(s) => {
                if !(s.eta0 > 0.0 && s.eta0.is_finite()) {
                    return Err(Error::config("train.lr", "must be positive"));
                }
                if !(s.decay >= 0.0 && s.decay.is_finite()) {
                    return Err(Error::config("train.sgd_decay", "must be non-negative"));
                }
            }
            Optimizer::Adam(a) => {
                if !(a.lr > 0.0 && a.lr.is_finite()) {
                    return Err(Error::config("train.lr", "must be positive"));
                }
                if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
                    return Err(Error::config("train.beta", "Adam betas must lie in [0, 1)"));
                }
                if a.eps.is_nan() || a.eps <= 0.0 {
                    return Err(Error::config("train.eps", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// `θ ← θ - η·g`.
pub fn sgd_step(theta: &mut ModelParams, g: &[f64], eta: f64) -> Result<()> {
    theta.check_same_shape(g, "gradient")?;
    for (t, gi) in theta.flat.iter_mut().zip(g) {
        *t -= eta * gi;
    }
    Ok(())
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(cfg: &AdamConfig, state: &mut AdamState, theta: &mut ModelParams, g: &[f64]) -> Result<()> {
    theta.check_same_shape(g, "gradient")?;
    theta.check_same_shape(&state.m, "Adam state")?;
    state.t += 1;
    let c1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let c2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for (((t, m), v), &gi) in theta.flat.iter_mut().zip(&mut state.m).zip(&mut state.v).zip(g) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gi;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gi * gi;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *t -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum OptState {
    Sgd { schedule: SgdSchedule, step: u64 },
    Adam { cfg: AdamConfig, state: AdamState },
}

/// One trainer's optimizer state and shuffle stream. Kept alive across
/// calls so that training in several sessions (e.g. federated rounds)
/// continues the same trajectory a single long session would follow.
#[derive(Debug, Clone)]
pub struct LocalTrainer {
    batch_size: usize,
    opt: OptState,
    shuffle: ChaCha8Rng,
    order: Vec<usize>,
}

impl LocalTrainer {
    pub fn new(cfg: &TrainConfig, n_params: usize) -> Result<Self> {
        cfg.validate()?;
        let opt = match cfg.optimizer {
            Optimizer::Sgd(schedule) => OptState::Sgd { schedule, step: 0 },
            Optimizer::Adam(a) => OptState::Adam {
                cfg: a,
                state: AdamState::new(n_params),
            },
        };
        Ok(LocalTrainer {
            batch_size: cfg.batch_size,
            opt,
            shuffle: ChaCha8Rng::seed_from_u64(cfg.shuffle_seed),
            order: Vec::new(),
        })
    }

    /// Runs `epochs` shuffled passes over `data`; each pass takes
    /// `ceil(len / batch_size)` steps, the last batch possibly short.
    /// Returns the mean training loss of the final pass, measured on the
    /// batches as they were visited.
    pub fn train(&mut self, theta: &mut ModelParams, data: &[Sample], epochs: usize) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::input("cannot train on an empty dataset"));
        }
        if self.order.len() != data.len() {
            self.order = (0..data.len()).collect();
        }
        let mut batch: Vec<Sample> = Vec::with_capacity(self.batch_size);
        let mut last_loss = f64::NAN;
        for _ in 0..epochs {
            self.order.shuffle(&mut self.shuffle);
            let mut epoch_loss = 0.0;
            for idx in self.order.chunks(self.batch_size) {
                batch.clear();
                batch.extend(idx.iter().map(|&i| data[i]));
                let (l, g) = loss_and_grad(theta, &batch)?;
                epoch_loss += l * batch.len() as f64;
                match &mut self.opt {
                    OptState::Sgd { schedule, step } => {
                        sgd_step(theta, &g, schedule.eta(*step))?;
                        *step += 1;
                    }
                    OptState::Adam { cfg, state } => adam_step(cfg, state, theta, &g)?,
                }
            }
            last_loss = epoch_loss / data.len() as f64;
        }
        if theta.flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("training diverged to non-finite parameters".into()));
        }
        Ok(last_loss)
    }
}

/// `cfg.epochs` passes of mini-batch training from `theta`.
pub fn local_train(theta: &ModelParams, data: &[Sample], cfg: &TrainConfig) -> Result<ModelParams> {
    let mut out = theta.clone();
    LocalTrainer::new(cfg, theta.len())?.train(&mut out, data, cfg.epochs)?;
    Ok(out)
}
