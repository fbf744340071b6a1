//! Symbol detection over flat Rayleigh fading with model-based MAP
//! receivers and a compact neural receiver trained by federated averaging.
//!
//! * [`channel`]: Gray QAM, fading, noise and pilot datasets.
//! * [`detectors`]: closed-form and quadrature MAP, estimated-scale and
//!   coherent baselines.
//! * [`nn`]: the softmax classifier, its gradients and optimizers.
//! * [`fed`]: federated, centralized and local-only training plus
//!   communication accounting.
//! * [`harness`]: experiment configuration, Monte-Carlo BER and reports.

pub mod channel;
pub mod detectors;
pub mod error;
pub mod fed;
pub mod harness;
pub mod nn;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use channel::{ChannelDraw, ComplexSample, Constellation, FadingSpec, Features, PilotDataset, PilotRecord};
pub use detectors::{DetectorMetric, Observation, QuadratureConfig, SymbolDetector};
pub use error::{Error, Result};
pub use fed::{FedConfig, OverheadReport, Scheme};
pub use harness::{BerReport, BerRow, ExperimentConfig};
pub use nn::{ModelParams, TrainConfig};
pub use rng::{Purpose, SeedTree};
