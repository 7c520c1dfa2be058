//! Physical-layer simulation of RCP-OTFS integrated sensing and communication.
//!
//! Modules follow the processing chain: [`dd`] (operator algebra),
//! [`waveform`], [`channel`], [`estimation`] (pilot-based channel estimation
//! and radar sensing), [`fnn`] (path-count classifier), [`equalize`] and
//! [`harness`] (Monte Carlo experiments and reporting).

// Validation uses `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dd;
pub mod equalize;
pub mod error;
pub mod estimation;
pub mod fnn;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod selftest;
pub mod waveform;

pub use dd::{DdOperator, DdTransform, LinearOperator, PathParams, PathSet, QMode};
pub use error::{Error, Result};
pub use geometry::FrameGeometry;
pub use num_complex::Complex64;
