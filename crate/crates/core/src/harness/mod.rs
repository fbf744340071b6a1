//! Experiment configuration, Monte-Carlo BER evaluation and reports.
//!
//! A run has three phases per SNR point: (i) every user records pilots,
//! (ii) the learned receivers are trained, (iii) every receiver is scored
//! on a common test stream. All randomness comes from one master seed.

mod config;
mod eval;
mod experiment;
mod report;

pub use config::{
    ExperimentConfig, FadingConfig, FadingKind, MixtureRoute, OptimizerKind, Receiver, TestScale, CONFIG_KEYS,
    MIN_TEST_SIZE, SEED_ENV,
};
pub use eval::{ber_evaluate, EvalCounts, TestFading, TestStream};
pub use experiment::{
    constellation_at, estimated_scale, evaluate_models, gen_datasets, map_detector, named_detector, run_experiment,
    run_experiment_with, test_stream, train_scheme, user_scales, BerReport, BerRow, Trained,
};
pub use report::{
    emit_csv, emit_plot, format_overhead, format_table, read_csv, render_svg, write_csv, CSV_HEADER,
};
