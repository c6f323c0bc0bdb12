//! Numeric core for multi-step glucose forecasting with coherence-penalized
//! recurrent networks.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs: file formats, the CLI and thread pools live in the
//! `glyco` companion crate.
//!
//! Pipeline overview:
//!
//! 1. [`data`]: raw timestamped glucose / CHO / insulin events per patient.
//! 2. [`preprocess`]: 5-minute resampling, day cleaning, spike removal,
//!    PCHIP gap filling, chronological day split, standardization, windows.
//! 3. [`nnet`] and [`models`]: the two-output LSTM trained on the cMSE loss,
//!    plus ELM, GP and epsilon-SVR baselines behind one [`models::Predictor`].
//! 4. [`postprocess`]: causal moving-average smoothing of prediction traces.
//! 5. [`metrics`]: RMSE, dRMSE and the CG-EGA clinical grid.
//! 6. [`synth`]: a seeded synthetic patient generator.
#![no_std]
#![forbid(unsafe_code)]
// Range checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod models;
pub mod nnet;
pub mod pipeline;
pub mod postprocess;
pub mod preprocess;
pub mod rng;
pub mod synth;
pub mod time;

pub use error::{Error, Result};
