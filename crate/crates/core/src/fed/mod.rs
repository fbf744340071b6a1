//! Multi-user training: federated averaging (FedRec), centralized training
//! on pooled pilots (CL) and purely local training (NL).
//!
//! The exchange with the base station is simulated in-process. Each round,
//! every user starts from the broadcast parameters, trains locally, and
//! reports its update; the base station averages the updates with equal
//! weights and broadcasts the result. Users keep their own optimizer state
//! and shuffle stream across rounds.
//!
//! Seeds: the common initial model is drawn by the base station from
//! `Init` stream 0; user `u` shuffles with `Shuffle` stream `u`. CL reuses
//! `Init` 0 and `Shuffle` 0, NL user `u` uses `Init` `u` and `Shuffle` `u`.
//! With one user all three schemes therefore see the same random numbers.

mod overhead;

use std::io::Write;

use rayon::prelude::*;

use crate::channel::PilotDataset;
use crate::error::{Error, Result};
use crate::nn::{init_params, loss, LocalTrainer, ModelParams, Sample, TrainConfig};
use crate::rng::{Purpose, SeedTree};

pub use overhead::{comm_overhead, OverheadReport, Scheme};

#[derive(Debug, Clone, PartialEq)]
pub struct FedConfig {
    pub rounds: usize,
    pub local_epochs_per_round: usize,
    pub train: TrainConfig,
    pub layer_dims: Vec<usize>,
}

impl Default for FedConfig {
    fn default() -> Self {
        FedConfig {
            rounds: 5,
            local_epochs_per_round: 5,
            train: TrainConfig::default(),
            layer_dims: crate::nn::DEFAULT_LAYER_DIMS.to_vec(),
        }
    }
}

impl FedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.local_epochs_per_round == 0 {
            return Err(Error::config("fed.local_epochs_per_round", "must be at least 1"));
        }
        self.train.validate()
    }

    /// Local optimizer steps per round for a user holding `n_t` pilots.
    pub fn tau(&self, n_t: usize) -> usize {
        self.local_epochs_per_round * n_t.div_ceil(self.train.batch_size)
    }
}

/// One user's state inside federated training.
#[derive(Debug, Clone)]
pub struct FedUser {
    pub data: Vec<Sample>,
    trainer: LocalTrainer,
}

impl FedUser {
    pub fn new(data: Vec<Sample>, train: &TrainConfig, n_params: usize) -> Result<Self> {
        Ok(FedUser {
            data,
            trainer: LocalTrainer::new(train, n_params)?,
        })
    }
}

/// Per-user record of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTelemetry {
    pub round: usize,
    pub user: usize,
    pub local_loss_before: f64,
    pub local_loss_after: f64,
    pub delta_norm: f64,
}

/// `θ + (1/U) Σ g_u`, summed in user order.
pub fn aggregate_deltas(global: &ModelParams, deltas: &[Vec<f64>]) -> Result<ModelParams> {
    if deltas.is_empty() {
        return Err(Error::Protocol("no updates to aggregate".into()));
    }
    let mut sum = vec![0.0; global.len()];
    for (u, d) in deltas.iter().enumerate() {
        if d.len() != global.len() {
            return Err(Error::Protocol(format!(
                "user {u} sent {} values, model has {}",
                d.len(),
                global.len()
            )));
        }
        sum.iter_mut().zip(d).for_each(|(s, v)| *s += v);
    }
    let inv = 1.0 / deltas.len() as f64;
    let flat = global.flat.iter().zip(&sum).map(|(t, s)| t + s * inv).collect();
    ModelParams::from_flat(global.layer_dims(), flat)
}

/// Mean of the users' end points, summed in user order.
///
/// With a common start `θ`, this equals `θ + mean(θ_u − θ)` in exact
/// arithmetic. Averaging end points avoids the extra rounding of forming
/// and re-adding differences, so a single user's result passes through
/// unchanged.
fn average_endpoints(global: &ModelParams, endpoints: &[ModelParams]) -> Result<ModelParams> {
    let mut sum = vec![0.0; global.len()];
    for (u, p) in endpoints.iter().enumerate() {
        if p.layer_dims() != global.layer_dims() {
            return Err(Error::Protocol(format!(
                "user {u} returned widths {:?}, model has {:?}",
                p.layer_dims(),
                global.layer_dims()
            )));
        }
        sum.iter_mut().zip(&p.flat).for_each(|(s, v)| *s += v);
    }
    let inv = 1.0 / endpoints.len() as f64;
    ModelParams::from_flat(global.layer_dims(), sum.into_iter().map(|s| s * inv).collect())
}

/// One FedRec round: local training from `global` for `local_epochs` at
/// every user (in parallel), then equal-weight averaging.
pub fn fed_round(
    global: &ModelParams,
    users: &mut [FedUser],
    local_epochs: usize,
    round: usize,
) -> Result<(ModelParams, Vec<RoundTelemetry>)> {
    if users.is_empty() {
        return Err(Error::input("federated round needs at least one user"));
    }
    let results: Vec<Result<(ModelParams, RoundTelemetry)>> = users
        .par_iter_mut()
        .enumerate()
        .map(|(u, user)| {
            let mut local = global.clone();
            let before = loss(&local, &user.data)?;
            user.trainer.train(&mut local, &user.data, local_epochs)?;
            let after = loss(&local, &user.data)?;
            let delta_norm = local
                .flat
                .iter()
                .zip(&global.flat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            Ok((
                local,
                RoundTelemetry {
                    round,
                    user: u,
                    local_loss_before: before,
                    local_loss_after: after,
                    delta_norm,
                },
            ))
        })
        .collect();
    let mut endpoints = Vec::with_capacity(users.len());
    let mut telemetry = Vec::with_capacity(users.len());
    for r in results {
        let (p, t) = r?;
        endpoints.push(p);
        telemetry.push(t);
    }
    Ok((average_endpoints(global, &endpoints)?, telemetry))
}

#[derive(Debug, Clone)]
pub struct FedOutcome {
    pub params: ModelParams,
    pub telemetry: Vec<RoundTelemetry>,
}

fn user_train_config(train: &TrainConfig, seeds: &SeedTree, user: usize) -> TrainConfig {
    TrainConfig {
        shuffle_seed: seeds.derive_seed(Purpose::Shuffle, 0, user as u64),
        ..*train
    }
}

fn check_datasets(datasets: &[PilotDataset]) -> Result<()> {
    if datasets.is_empty() {
        return Err(Error::input("no user datasets"));
    }
    if let Some(d) = datasets.iter().find(|d| d.is_empty()) {
        return Err(Error::input(format!("user {} has an empty dataset", d.user_id)));
    }
    Ok(())
}

/// FedRec: common initialization, then `cfg.rounds` federated rounds.
pub fn fedrec_train(datasets: &[PilotDataset], cfg: &FedConfig, seeds: &SeedTree) -> Result<FedOutcome> {
    cfg.validate()?;
    check_datasets(datasets)?;
    let n = datasets[0].len();
    if let Some(d) = datasets.iter().find(|d| d.len() != n) {
        return Err(Error::input(format!(
            "federated users need equal-size datasets: user {} has {}, user {} has {n}",
            d.user_id,
            d.len(),
            datasets[0].user_id
        )));
    }
    let mut global = init_params(&mut seeds.rng(Purpose::Init, 0, 0), &cfg.layer_dims)?;
    let mut users = datasets
        .iter()
        .enumerate()
        .map(|(u, d)| FedUser::new(d.samples(), &user_train_config(&cfg.train, seeds, u), global.len()))
        .collect::<Result<Vec<_>>>()?;
    let mut telemetry = Vec::new();
    for round in 0..cfg.rounds {
        let (next, t) = fed_round(&global, &mut users, cfg.local_epochs_per_round, round)?;
        global = next;
        telemetry.extend(t);
    }
    Ok(FedOutcome {
        params: global,
        telemetry,
    })
}

/// CL: one network trained on the pooled pilots of all users.
pub fn centralized_train(
    datasets: &[PilotDataset],
    train: &TrainConfig,
    layer_dims: &[usize],
    seeds: &SeedTree,
) -> Result<ModelParams> {
    check_datasets(datasets)?;
    let pooled: Vec<Sample> = datasets.iter().flat_map(|d| d.samples()).collect();
    let mut theta = init_params(&mut seeds.rng(Purpose::Init, 0, 0), layer_dims)?;
    let cfg = user_train_config(train, seeds, 0);
    LocalTrainer::new(&cfg, theta.len())?.train(&mut theta, &pooled, cfg.epochs)?;
    Ok(theta)
}

/// NL: one independently initialized network per user, trained on that
/// user's pilots only.
pub fn noncollab_train(
    datasets: &[PilotDataset],
    train: &TrainConfig,
    layer_dims: &[usize],
    seeds: &SeedTree,
) -> Result<Vec<ModelParams>> {
    check_datasets(datasets)?;
    train.validate()?;
    datasets
        .par_iter()
        .enumerate()
        .map(|(u, d)| {
            let mut theta = init_params(&mut seeds.rng(Purpose::Init, 0, u as u64), layer_dims)?;
            let cfg = user_train_config(train, seeds, u);
            LocalTrainer::new(&cfg, theta.len())?.train(&mut theta, &d.samples(), cfg.epochs)?;
            Ok(theta)
        })
        .collect()
}

pub fn write_telemetry_csv<W: Write>(rows: &[RoundTelemetry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "user", "local_loss_before", "local_loss_after", "delta_norm"])?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.user.to_string(),
            r.local_loss_before.to_string(),
            r.local_loss_after.to_string(),
            r.delta_norm.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
