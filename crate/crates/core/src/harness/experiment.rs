use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FadingKind, MixtureRoute, Receiver, TestScale};
use super::eval::{ber_evaluate, EvalCounts, TestFading, TestStream};
use crate::channel::{draw_user_scales, gen_dataset, Constellation, FadingSpec, PilotDataset};
use crate::detectors::{
    aggregate_scales, estimate_scale_ml, MapDetector, MinDistanceDetector, NumericMap, RayleighMap, ScaleMixtureMap,
    SymbolDetector,
};
use crate::error::{Error, Result};
use crate::fed::{centralized_train, comm_overhead, fedrec_train, noncollab_train, OverheadReport, RoundTelemetry, Scheme};
use crate::nn::{param_count, ModelParams, NnDetector};
use crate::rng::{Purpose, SeedTree};

/// One (receiver, SNR) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRow {
    pub scheme: String,
    pub snr_db: f64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    pub wall_time_s: f64,
}

impl BerRow {
    pub fn new(scheme: impl Into<String>, snr_db: f64, counts: EvalCounts, wall_time_s: f64) -> Self {
        BerRow {
            scheme: scheme.into(),
            snr_db,
            bit_errors: counts.bit_errors,
            total_bits: counts.total_bits,
            ber: counts.bit_errors as f64 / counts.total_bits as f64,
            wall_time_s,
        }
    }

    /// Binomial standard error of the BER estimate.
    pub fn std_error(&self) -> f64 {
        (self.ber * (1.0 - self.ber) / self.total_bits as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BerReport {
    pub rows: Vec<BerRow>,
    pub overhead: Vec<OverheadReport>,
}

impl BerReport {
    pub fn row(&self, scheme: &str, snr_db: f64) -> Option<&BerRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.snr_db == snr_db)
    }
}

/// Rayleigh scale of every user: all equal for iid fading, drawn from
/// `UserScales` stream 0 otherwise.
pub fn user_scales(cfg: &ExperimentConfig, seeds: &SeedTree) -> Result<Vec<f64>> {
    match cfg.fading.kind {
        FadingKind::Iid => Ok(vec![cfg.fading.sigma; cfg.users]),
        FadingKind::NonIid => draw_user_scales(cfg.users, &cfg.fading.spec()?, &mut seeds.rng(Purpose::UserScales, 0, 0)),
    }
}

/// The constellation used at a grid point.
pub fn constellation_at(cfg: &ExperimentConfig, snr_db: f64) -> Result<Constellation> {
    Constellation::for_snr(cfg.order, snr_db + cfg.snr_offset_db)
}

/// Pilot datasets of all users. User `u` reads `Dataset` stream `u` at
/// every SNR point, so the points differ only through the amplitude.
pub fn gen_datasets(cfg: &ExperimentConfig, seeds: &SeedTree, c: &Constellation) -> Result<Vec<PilotDataset>> {
    let scales = user_scales(cfg, seeds)?;
    let n_t = cfg.per_user_train();
    scales
        .iter()
        .enumerate()
        .map(|(u, &s)| gen_dataset(u, s, n_t, c, &mut seeds.rng(Purpose::Dataset, 0, u as u64)))
        .collect()
}

/// The common test stream of a run.
pub fn test_stream(cfg: &ExperimentConfig, seeds: &SeedTree) -> Result<TestStream> {
    let fading = match cfg.fading.kind {
        FadingKind::Iid => TestFading::Fixed { sigma: cfg.fading.sigma },
        FadingKind::NonIid => match cfg.test_scale {
            TestScale::PerBlock => TestFading::blocks(seeds, cfg.users, cfg.test_size, cfg.fading.lo, cfg.fading.hi)?,
            TestScale::PerSymbol => TestFading::PerSymbol {
                lo: cfg.fading.lo,
                hi: cfg.fading.hi,
            },
        },
    };
    Ok(TestStream::new(*seeds, cfg.test_size, cfg.chunk_size, fading))
}

/// Learned receivers of one training run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub scheme: Scheme,
    /// One model, or one per user for NL.
    pub models: Vec<ModelParams>,
    pub telemetry: Vec<RoundTelemetry>,
}

pub fn train_scheme(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    datasets: &[PilotDataset],
    seeds: &SeedTree,
) -> Result<Trained> {
    let train = cfg.train_config();
    let (models, telemetry) = match scheme {
        Scheme::FedRec => {
            let out = fedrec_train(datasets, &cfg.fed_config(), seeds)?;
            (vec![out.params], out.telemetry)
        }
        Scheme::Cl => (vec![centralized_train(datasets, &train, &cfg.layer_dims, seeds)?], Vec::new()),
        Scheme::Nl => (noncollab_train(datasets, &train, &cfg.layer_dims, seeds)?, Vec::new()),
    };
    Ok(Trained {
        scheme,
        models,
        telemetry,
    })
}

/// Sums the counts of every model on the same test stream.
pub fn evaluate_models(models: &[ModelParams], stream: &TestStream, c: &Constellation) -> Result<EvalCounts> {
    let mut total = EvalCounts::default();
    for m in models {
        total += ber_evaluate(&NnDetector { params: m.clone() }, stream, c)?;
    }
    Ok(total)
}

/// MAP detector for the configured fading law: the Rayleigh closed form
/// for iid fading, the mixture likelihood otherwise.
pub fn map_detector(cfg: &ExperimentConfig, c: &Constellation) -> Result<Box<dyn SymbolDetector>> {
    let spec = cfg.fading.spec()?;
    Ok(match (spec, cfg.mixture_route) {
        (FadingSpec::RayleighFixed { sigma }, _) => Box::new(MapDetector::new(RayleighMap::new(sigma)?, c.clone())),
        (_, MixtureRoute::Scale) => Box::new(MapDetector::new(ScaleMixtureMap::new(spec, &cfg.quadrature)?, c.clone())),
        (_, MixtureRoute::Magnitude) => Box::new(MapDetector::new(NumericMap::new(spec, &cfg.quadrature)?, c.clone())),
    })
}

/// Scale estimate pooled over the users' pilots.
pub fn estimated_scale(datasets: &[PilotDataset], c: &Constellation) -> Result<f64> {
    let per_user = datasets
        .iter()
        .map(|d| estimate_scale_ml(d, c))
        .collect::<Result<Vec<_>>>()?;
    aggregate_scales(&per_user)
}

/// A receiver by its configuration name.
///
/// `map-numeric` integrates the likelihood numerically for the configured
/// law, `map-rayleigh` uses the closed form with the configured iid scale,
/// `md-estimated` the closed form with the scale estimated from
/// `datasets`, `min-distance` the known channel. Neural receivers are built
/// from parameters instead, see [`NnDetector`].
pub fn named_detector(
    name: &str,
    cfg: &ExperimentConfig,
    c: &Constellation,
    datasets: Option<&[PilotDataset]>,
) -> Result<Box<dyn SymbolDetector>> {
    let spec = cfg.fading.spec()?;
    Ok(match name {
        "map-numeric" => match (spec, cfg.mixture_route) {
            (FadingSpec::RayleighUniformScale { .. }, MixtureRoute::Scale) => {
                Box::new(MapDetector::new(ScaleMixtureMap::new(spec, &cfg.quadrature)?, c.clone()))
            }
            _ => Box::new(MapDetector::new(NumericMap::new(spec, &cfg.quadrature)?, c.clone())),
        },
        "map-rayleigh" => Box::new(MapDetector::new(RayleighMap::new(cfg.fading.sigma)?, c.clone())),
        "md-estimated" => {
            let d = datasets.ok_or_else(|| Error::input("md-estimated needs pilot datasets"))?;
            Box::new(MapDetector::new(RayleighMap::new(estimated_scale(d, c)?)?, c.clone()))
        }
        "min-distance" => Box::new(MinDistanceDetector { constellation: c.clone() }),
        "nn" => return Err(Error::input("the nn receiver is built from trained parameters")),
        other => {
            return Err(Error::input(format!(
                "unknown detector `{other}` (map-numeric, map-rayleigh, md-estimated, min-distance, nn)"
            )))
        }
    })
}

fn scheme_of(r: Receiver) -> Option<Scheme> {
    match r {
        Receiver::Nl => Some(Scheme::Nl),
        Receiver::Cl => Some(Scheme::Cl),
        Receiver::FedRec => Some(Scheme::FedRec),
        _ => None,
    }
}

/// Runs the configured sweep on a pool of `cfg.workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BerReport> {
    run_experiment_with(cfg, &|_| {})
}

/// [`run_experiment`], reporting each row as soon as it is finished.
pub fn run_experiment_with(cfg: &ExperimentConfig, progress: &(dyn Fn(&BerRow) + Sync)) -> Result<BerReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("eval.workers", e.to_string()))?;
    pool.install(|| run_inner(cfg, progress))
}

fn run_inner(cfg: &ExperimentConfig, progress: &(dyn Fn(&BerRow) + Sync)) -> Result<BerReport> {
    let seeds = SeedTree::new(cfg.master_seed);
    let stream = test_stream(cfg, &seeds)?;
    let needs_data = cfg.schemes.iter().any(|r| r.is_learned() || *r == Receiver::Md);
    let mut rows = Vec::new();
    for &snr in &cfg.snr_grid_db {
        let c = constellation_at(cfg, snr)?;
        let datasets = if needs_data { gen_datasets(cfg, &seeds, &c)? } else { Vec::new() };
        for &r in &cfg.schemes {
            let t = Instant::now();
            let counts = match r {
                Receiver::Map => ber_evaluate(map_detector(cfg, &c)?.as_ref(), &stream, &c)?,
                Receiver::Md => {
                    let det = MapDetector::new(RayleighMap::new(estimated_scale(&datasets, &c)?)?, c.clone());
                    ber_evaluate(&det, &stream, &c)?
                }
                Receiver::MinDist => ber_evaluate(&MinDistanceDetector { constellation: c.clone() }, &stream, &c)?,
                learned => {
                    let scheme = scheme_of(learned).expect("learned receiver");
                    let trained = train_scheme(cfg, scheme, &datasets, &seeds)?;
                    evaluate_models(&trained.models, &stream, &c)?
                }
            };
            let row = BerRow::new(r.as_str(), snr, counts, t.elapsed().as_secs_f64());
            progress(&row);
            rows.push(row);
        }
    }
    let n_params = param_count(&cfg.layer_dims);
    let overhead = cfg
        .schemes
        .iter()
        .filter_map(|&r| scheme_of(r))
        .map(|s| comm_overhead(s, cfg.users, n_params, cfg.rounds, cfg.users * cfg.per_user_train()))
        .collect();
    Ok(BerReport { rows, overhead })
}
