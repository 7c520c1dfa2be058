//! Monte Carlo experiments, metric aggregation and CSV reporting.
//!
//! Every experiment is a pure function of its [`SimConfig`]: trial `i`
//! draws from child streams of the master seed indexed by `i`, trials run
//! on the rayon pool and are reduced in trial order.

mod config;
mod csv;
mod experiments;
mod metrics;

pub use config::{
    CsiMode, EqualizerKind, EqualizerSection, EstimationSection, FnnSection, PathCountMode, PilotConfig, RunConfig, SensingSection,
    SimConfig, StepKind, SweepAxis, SweepConfig,
};
pub use csv::{to_csv, write_csv, CSV_HEADER};
pub use experiments::{
    ber_sweep, chest_sweep, detect_eval, estimator_config, evaluate_classifier, pilot_spec, run_trials, sensing_sweep, target_bins,
    train_classifier,
};
pub use metrics::{
    channel_frobenius_sq, crlb_reference, nmse, nmse_db_paths, nmse_db_summary, nmse_ratio, nmse_ratio_paths, rmse_summary, t_inner,
    Accumulator, MetricRow, NMSE_FLOOR_DB,
};
