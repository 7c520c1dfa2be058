//! Data detection: LMMSE benchmark, iterative matched-filter combining
//! (IMFC), hard decisions and bit error rate.

mod detect;
mod imfc;
mod lmmse;

pub use detect::{ber, bit_errors, ml_detect, HardDecision};
pub use imfc::{default_epsilon, imfc_equalize, spectral_radius, CountingOperator, DetectionResult, EqualizerConfig, StepMode};
pub use lmmse::{lmmse_equalize, LmmseEqualizer, LmmseSolver};
