//! Experiment configuration.
//!
//! Configuration files are TOML restricted to flat dotted keys, e.g.
//!
//! ```toml
//! seed = 7
//! users = 5
//! fading.kind = "non-iid"
//! snr.grid_db = [5, 7.5, 10, 12.5]
//! fed.rounds = 5
//! ```
//!
//! Every key can also be given as a `key=value` override; the value is read
//! as a TOML value when it parses as one and as a bare string otherwise, and
//! lists may be written comma-separated. Precedence, lowest first: built-in
//! defaults, the [`SEED_ENV`] variable, the file, overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::channel::{scale_for_snr, FadingSpec};
use crate::detectors::QuadratureConfig;
use crate::error::{Error, Result};
use crate::fed::FedConfig;
use crate::nn::{AdamConfig, Optimizer, SgdSchedule, TrainConfig, DEFAULT_LAYER_DIMS};

/// Environment variable that replaces the default master seed.
pub const SEED_ENV: &str = "FADINGRX_SEED";

/// Every configuration key with a one-line description.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("seed", "master seed of every random stream"),
    ("users", "number of users U"),
    ("fading.kind", "iid | non-iid"),
    ("fading.sigma", "Rayleigh scale of the iid setup"),
    ("fading.lo", "lower end of the non-iid scale range"),
    ("fading.hi", "upper end of the non-iid scale range"),
    ("modulation.order", "QAM order M (power of 4)"),
    ("snr.grid_db", "SNR per bit points in dB"),
    ("snr.offset_db", "shift added to every SNR point when scaling the constellation"),
    ("data.train_size", "pilots over all users; each user gets train_size / U"),
    ("data.test_size", "test symbols per SNR point"),
    ("schemes", "receivers to run: NL, CL, FedRec, MD, MAP, MinDist"),
    ("fed.rounds", "federated rounds"),
    ("fed.local_epochs", "local epochs per round"),
    ("train.optimizer", "adam | sgd"),
    ("train.lr", "step size (default 1e-3 for adam, 1e-2 for sgd)"),
    ("train.sgd_decay", "sgd step size decay: lr / (1 + decay n)"),
    ("train.beta1", "Adam first-moment decay"),
    ("train.beta2", "Adam second-moment decay"),
    ("train.eps", "Adam denominator offset"),
    ("train.batch_size", "mini-batch size"),
    ("train.epochs", "epochs for CL and NL training"),
    ("nn.layer_dims", "layer widths, input 2 first, M last"),
    ("quadrature.node_count", "Gauss-Legendre nodes in the fading magnitude"),
    ("quadrature.tail_epsilon", "neglected tail mass of the likelihood integrand"),
    ("quadrature.scale_mixture_nodes", "Gauss-Legendre nodes over the Rayleigh scale"),
    ("quadrature.route", "scale | magnitude: integration order for the non-iid MAP"),
    ("eval.test_scale", "per-block | per-symbol scale draws in the non-iid test stream"),
    ("eval.chunk_size", "symbols per random stream chunk"),
    ("eval.workers", "worker threads, 0 for all cores"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    /// Every user sees Rayleigh fading with the same scale.
    Iid,
    /// User scales are drawn uniformly from a range.
    NonIid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingConfig {
    pub kind: FadingKind,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        FadingConfig {
            kind: FadingKind::Iid,
            sigma: 1.0,
            lo: 0.5,
            hi: 1.5,
        }
    }
}

impl FadingConfig {
    /// The marginal fading law of a symbol from a random user.
    pub fn spec(&self) -> Result<FadingSpec> {
        match self.kind {
            FadingKind::Iid => FadingSpec::rayleigh(self.sigma),
            FadingKind::NonIid => FadingSpec::uniform_scale(self.lo, self.hi),
        }
    }
}

/// How the non-iid test stream assigns Rayleigh scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestScale {
    /// The test set is split into U consecutive blocks, one scale each.
    PerBlock,
    /// Every symbol draws its own scale.
    PerSymbol,
}

/// Order of integration for the mixture likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureRoute {
    /// Closed-form Rayleigh likelihood integrated over the scale.
    Scale,
    /// Quadrature over the fading magnitude against the mixture density.
    Magnitude,
}

/// A receiver in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Receiver {
    Nl,
    Cl,
    FedRec,
    /// Rayleigh closed form with the scale estimated from the pilots.
    Md,
    /// MAP with the true fading law.
    Map,
    /// Coherent minimum distance with the channel known.
    MinDist,
}

impl Receiver {
    pub const ALL: [Receiver; 6] = [
        Receiver::Nl,
        Receiver::Cl,
        Receiver::FedRec,
        Receiver::Md,
        Receiver::Map,
        Receiver::MinDist,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Receiver::Nl => "NL",
            Receiver::Cl => "CL",
            Receiver::FedRec => "FedRec",
            Receiver::Md => "MD",
            Receiver::Map => "MAP",
            Receiver::MinDist => "MinDist",
        }
    }

    pub fn is_learned(self) -> bool {
        matches!(self, Receiver::Nl | Receiver::Cl | Receiver::FedRec)
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Receiver::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::input(format!("unknown scheme `{t}` (NL, CL, FedRec, MD, MAP, MinDist)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub users: usize,
    pub fading: FadingConfig,
    pub order: usize,
    pub snr_grid_db: Vec<f64>,
    pub snr_offset_db: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub schemes: Vec<Receiver>,
    pub rounds: usize,
    pub local_epochs: usize,
    pub optimizer: OptimizerKind,
    pub lr: Option<f64>,
    pub sgd_decay: f64,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub layer_dims: Vec<usize>,
    pub quadrature: QuadratureConfig,
    pub mixture_route: MixtureRoute,
    pub test_scale: TestScale,
    pub chunk_size: usize,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 1,
            users: 5,
            fading: FadingConfig::default(),
            order: 16,
            snr_grid_db: vec![5.0, 7.5, 10.0, 12.5],
            snr_offset_db: 0.0,
            train_size: 20_000,
            test_size: 1_000_000,
            schemes: vec![Receiver::Map, Receiver::Md, Receiver::FedRec, Receiver::Cl, Receiver::Nl],
            rounds: 5,
            local_epochs: 5,
            optimizer: OptimizerKind::Adam,
            lr: None,
            sgd_decay: 0.0,
            adam: AdamConfig::default(),
            batch_size: 20,
            epochs: 25,
            layer_dims: DEFAULT_LAYER_DIMS.to_vec(),
            quadrature: QuadratureConfig::default(),
            mixture_route: MixtureRoute::Scale,
            test_scale: TestScale::PerBlock,
            chunk_size: 1 << 16,
            workers: 0,
        }
    }
}

/// Smallest accepted test set.
pub const MIN_TEST_SIZE: usize = 10_000;

impl ExperimentConfig {
    /// Pilots per user.
    pub fn per_user_train(&self) -> usize {
        self.train_size / self.users.max(1)
    }

    pub fn train_config(&self) -> TrainConfig {
        let optimizer = match self.optimizer {
            OptimizerKind::Adam => Optimizer::Adam(AdamConfig {
                lr: self.lr.unwrap_or(self.adam.lr),
                ..self.adam
            }),
            OptimizerKind::Sgd => Optimizer::Sgd(SgdSchedule {
                eta0: self.lr.unwrap_or(1e-2),
                decay: self.sgd_decay,
            }),
        };
        TrainConfig {
            optimizer,
            batch_size: self.batch_size,
            epochs: self.epochs,
            shuffle_seed: 0,
        }
    }

    pub fn fed_config(&self) -> FedConfig {
        FedConfig {
            rounds: self.rounds,
            local_epochs_per_round: self.local_epochs,
            train: self.train_config(),
            layer_dims: self.layer_dims.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::config("users", "must be at least 1"));
        }
        FadingSpec::rayleigh(self.fading.sigma).map_err(|e| Error::config("fading.sigma", e.to_string()))?;
        FadingSpec::uniform_scale(self.fading.lo, self.fading.hi)
            .map_err(|e| Error::config("fading.lo", e.to_string()))?;
        scale_for_snr(0.0, self.order).map_err(|e| Error::config("modulation.order", e.to_string()))?;
        if self.snr_grid_db.is_empty() {
            return Err(Error::config("snr.grid_db", "must not be empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) || !self.snr_offset_db.is_finite() {
            return Err(Error::config("snr.grid_db", "values must be finite"));
        }
        if self.train_size < self.users {
            return Err(Error::config("data.train_size", "must give every user at least one pilot"));
        }
        if self.test_size < MIN_TEST_SIZE {
            return Err(Error::config("data.test_size", format!("must be at least {MIN_TEST_SIZE}")));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "must name at least one receiver"));
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return Err(Error::config("schemes", "lists a receiver twice"));
        }
        if self.chunk_size == 0 {
            return Err(Error::config("eval.chunk_size", "must be at least 1"));
        }
        if self.layer_dims.last() != Some(&self.order) {
            return Err(Error::config("nn.layer_dims", format!("last width must equal the order {}", self.order)));
        }
        crate::nn::ModelParams::zeros(&self.layer_dims)?;
        self.quadrature.validate()?;
        self.fed_config().validate()?;
        if self.rounds == 0 && self.schemes.contains(&Receiver::FedRec) {
            return Err(Error::config("fed.rounds", "must be at least 1"));
        }
        Ok(())
    }

    /// Defaults, then the seed variable, then `file`, then `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Ok(raw) = std::env::var(SEED_ENV) {
            cfg.set(SEED_ENV, &toml::Value::String(raw))?;
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            cfg.apply_toml(&text)?;
        }
        for o in overrides {
            cfg.apply_override(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        let mut flat = BTreeMap::new();
        flatten("", &toml::Value::Table(table), &mut flat);
        for (k, v) in flat {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, raw: &str) -> Result<()> {
        let (key, value) = raw
            .split_once('=')
            .ok_or_else(|| Error::config(raw, "expected key=value"))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        self.set(key, &parsed)
    }

    pub fn set(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        match key {
            "seed" | SEED_ENV => self.master_seed = as_u64(key, v)?,
            "users" => self.users = as_usize(key, v)?,
            "fading.kind" => {
                self.fading.kind = match as_str(key, v)?.to_ascii_lowercase().as_str() {
                    "iid" => FadingKind::Iid,
                    "non-iid" | "noniid" | "non_iid" => FadingKind::NonIid,
                    other => return Err(Error::config(key, format!("`{other}` is not iid or non-iid"))),
                }
            }
            "fading.sigma" => self.fading.sigma = as_f64(key, v)?,
            "fading.lo" => self.fading.lo = as_f64(key, v)?,
            "fading.hi" => self.fading.hi = as_f64(key, v)?,
            "modulation.order" => self.order = as_usize(key, v)?,
            "snr.grid_db" => self.snr_grid_db = as_list(key, v, as_f64)?,
            "snr.offset_db" => self.snr_offset_db = as_f64(key, v)?,
            "data.train_size" => self.train_size = as_usize(key, v)?,
            "data.test_size" => self.test_size = as_usize(key, v)?,
            "schemes" => {
                self.schemes = as_list(key, v, |k, x| {
                    as_str(k, x)?.parse::<Receiver>().map_err(|e| Error::config(k, e.to_string()))
                })?
            }
            "fed.rounds" => self.rounds = as_usize(key, v)?,
            "fed.local_epochs" => self.local_epochs = as_usize(key, v)?,
            "train.optimizer" => {
                self.optimizer = match as_str(key, v)?.to_ascii_lowercase().as_str() {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    other => return Err(Error::config(key, format!("`{other}` is not adam or sgd"))),
                }
            }
            "train.lr" => self.lr = Some(as_f64(key, v)?),
            "train.sgd_decay" => self.sgd_decay = as_f64(key, v)?,
            "train.beta1" => self.adam.beta1 = as_f64(key, v)?,
            "train.beta2" => self.adam.beta2 = as_f64(key, v)?,
            "train.eps" => self.adam.eps = as_f64(key, v)?,
            "train.batch_size" => self.batch_size = as_usize(key, v)?,
            "train.epochs" => self.epochs = as_usize(key, v)?,
            "nn.layer_dims" => self.layer_dims = as_list(key, v, as_usize)?,
            "quadrature.node_count" => self.quadrature.node_count = as_usize(key, v)?,
            "quadrature.tail_epsilon" => self.quadrature.tail_epsilon = as_f64(key, v)?,
            "quadrature.scale_mixture_nodes" => self.quadrature.scale_mixture_nodes = as_usize(key, v)?,
            "quadrature.route" => {
                self.mixture_route = match as_str(key, v)?.to_ascii_lowercase().as_str() {
                    "scale" => MixtureRoute::Scale,
                    "magnitude" => MixtureRoute::Magnitude,
                    other => return Err(Error::config(key, format!("`{other}` is not scale or magnitude"))),
                }
            }
            "eval.test_scale" => {
                self.test_scale = match as_str(key, v)?.to_ascii_lowercase().as_str() {
                    "per-block" | "block" => TestScale::PerBlock,
                    "per-symbol" | "symbol" => TestScale::PerSymbol,
                    other => return Err(Error::config(key, format!("`{other}` is not per-block or per-symbol"))),
                }
            }
            "eval.chunk_size" => self.chunk_size = as_usize(key, v)?,
            "eval.workers" => self.workers = as_usize(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// The configuration as a flat dotted-key file.
    pub fn to_toml(&self) -> String {
        let list = |v: Vec<String>| format!("[{}]", v.join(", "));
        let f = |x: f64| format!("{x:?}");
        let mut lines = vec![
            format!("seed = {}", self.master_seed),
            format!("users = {}", self.users),
            format!(
                "fading.kind = \"{}\"",
                match self.fading.kind {
                    FadingKind::Iid => "iid",
                    FadingKind::NonIid => "non-iid",
                }
            ),
            format!("fading.sigma = {}", f(self.fading.sigma)),
            format!("fading.lo = {}", f(self.fading.lo)),
            format!("fading.hi = {}", f(self.fading.hi)),
            format!("modulation.order = {}", self.order),
            format!("snr.grid_db = {}", list(self.snr_grid_db.iter().map(|&x| f(x)).collect())),
            format!("snr.offset_db = {}", f(self.snr_offset_db)),
            format!("data.train_size = {}", self.train_size),
            format!("data.test_size = {}", self.test_size),
            format!("schemes = {}", list(self.schemes.iter().map(|s| format!("\"{s}\"")).collect())),
            format!("fed.rounds = {}", self.rounds),
            format!("fed.local_epochs = {}", self.local_epochs),
            format!(
                "train.optimizer = \"{}\"",
                match self.optimizer {
                    OptimizerKind::Adam => "adam",
                    OptimizerKind::Sgd => "sgd",
                }
            ),
        ];
        if let Some(lr) = self.lr {
            lines.push(format!("train.lr = {}", f(lr)));
        }
        lines.extend([
            format!("train.sgd_decay = {}", f(self.sgd_decay)),
            format!("train.beta1 = {}", f(self.adam.beta1)),
            format!("train.beta2 = {}", f(self.adam.beta2)),
            format!("train.eps = {}", f(self.adam.eps)),
            format!("train.batch_size = {}", self.batch_size),
            format!("train.epochs = {}", self.epochs),
            format!("nn.layer_dims = {}", list(self.layer_dims.iter().map(|d| d.to_string()).collect())),
            format!("quadrature.node_count = {}", self.quadrature.node_count),
            format!("quadrature.tail_epsilon = {}", f(self.quadrature.tail_epsilon)),
            format!("quadrature.scale_mixture_nodes = {}", self.quadrature.scale_mixture_nodes),
            format!(
                "quadrature.route = \"{}\"",
                match self.mixture_route {
                    MixtureRoute::Scale => "scale",
                    MixtureRoute::Magnitude => "magnitude",
                }
            ),
            format!(
                "eval.test_scale = \"{}\"",
                match self.test_scale {
                    TestScale::PerBlock => "per-block",
                    TestScale::PerSymbol => "per-symbol",
                }
            ),
            format!("eval.chunk_size = {}", self.chunk_size),
            format!("eval.workers = {}", self.workers),
        ]);
        lines.join("\n") + "\n"
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, toml::Value>) {
    match v {
        toml::Value::Table(t) => {
            for (k, x) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn type_error(key: &str, want: &str, v: &toml::Value) -> Error {
    Error::config(key, format!("expected {want}, got `{v}`"))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => s.trim().parse().map_err(|_| type_error(key, "a number", v)),
        _ => Err(type_error(key, "a number", v)),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        toml::Value::String(s) => s.trim().parse().map_err(|_| type_error(key, "a non-negative integer", v)),
        _ => Err(type_error(key, "a non-negative integer", v)),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        // allow 1e6-style floats for sizes when they are whole numbers
        toml::Value::Float(x) if *x >= 0.0 && x.fract() == 0.0 && *x <= 9.007e15 => Ok(*x as usize),
        _ => as_u64(key, v).map(|x| x as usize),
    }
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| type_error(key, "a string", v))
}

fn as_list<T>(key: &str, v: &toml::Value, item: impl Fn(&str, &toml::Value) -> Result<T>) -> Result<Vec<T>> {
    match v {
        toml::Value::Array(a) => a.iter().map(|x| item(key, x)).collect(),
        toml::Value::String(s) => s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| item(key, &toml::Value::String(p.trim().to_string())))
            .collect(),
        other => item(key, other).map(|x| vec![x]),
    }
}
