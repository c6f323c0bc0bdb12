//! Minimal recurrent-network numerics: a single-layer LSTM with a shared
//! linear head read at the last two unrolled steps, the MSE/cMSE losses,
//! backpropagation through time, Adam and an early-stopped training loop.

mod adam;
mod loss;
mod lstm;
mod train;

pub use adam::AdamState;
pub use loss::{loss_cmse, loss_mse, CmseLoss};
pub use lstm::{lstm_backward, lstm_forward, objective, ForwardCache, LstmParams, TwoStepPrediction};
pub use train::{evaluate_loss, train, EpochLog, TrainConfig, TrainingLog};
