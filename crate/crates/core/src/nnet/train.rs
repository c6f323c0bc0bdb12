use alloc::vec::Vec;

use super::lstm::{accumulate_gradient, Workspace};
use super::{lstm_forward, AdamState, CmseLoss, ForwardCache, LstmParams};
use crate::linalg;
use crate::preprocess::SampleWindow;
use crate::rng::SplitMix64;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2_penalty: f64,
    pub coherence: f64,
    /// Also penalize the point error at `t + PH - 1`.
    pub both_steps: bool,
    pub max_epochs: usize,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    /// Global gradient-norm clip applied before each Adam step.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-3,
            batch_size: 10,
            l2_penalty: 1e-4,
            coherence: 0.0,
            both_steps: false,
            max_epochs: 500,
            patience: 10,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn loss(&self) -> CmseLoss {
        CmseLoss {
            coherence: self.coherence,
            both_steps: self.both_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || !(self.coherence >= 0.0) || !(self.l2_penalty >= 0.0)
        {
            return Err(Error::InvalidArgument(alloc::format!(
                "invalid training config: lr {}, batch {}, c {}, l2 {}",
                self.learning_rate,
                self.batch_size,
                self.coherence,
                self.l2_penalty
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean mini-batch objective (data term) over the epoch.
    pub train_loss: f64,
    pub valid_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    /// Validation loss of the initial parameters.
    pub initial_valid_loss: f64,
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were returned (0 = initial parameters).
    pub best_epoch: usize,
    pub best_valid_loss: f64,
}

/// cMSE of the model on `windows`, no penalty term.
pub fn evaluate_loss(params: &LstmParams, windows: &[SampleWindow], loss: &CmseLoss) -> Result<f64> {
    let mut cache = ForwardCache::default();
    let mut preds = Vec::with_capacity(windows.len());
    let mut targets = Vec::with_capacity(windows.len());
    for w in windows {
        preds.push(lstm_forward(params, &w.features, &mut cache)?);
        targets.push((w.target_prev, w.target_final));
    }
    loss.value(&preds, &targets)
}

/// Mini-batch Adam on the cMSE objective with early stopping on the
/// validation cMSE. Returns the parameters of the best validation epoch.
pub fn train(
    init: LstmParams,
    train_set: &[SampleWindow],
    valid_set: &[SampleWindow],
    config: &TrainConfig,
) -> Result<(LstmParams, TrainingLog)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training windows"));
    }
    if valid_set.is_empty() {
        return Err(Error::EmptyInput("validation windows"));
    }
    let loss = config.loss();
    let mut params = init;
    let mut adam = AdamState::new(params.as_slice().len());
    let mut grads = LstmParams::zeros(params.units(), params.inputs());
    let mut ws = Workspace::default();
    let mut rng = SplitMix64::derive(config.seed, 0x5348_5546);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let initial = evaluate_loss(&params, valid_set, &loss).map_err(|_| Error::Diverged { epoch: 0 })?;
    if !initial.is_finite() {
        return Err(Error::Diverged { epoch: 0 });
    }
    let mut log = TrainingLog {
        initial_valid_loss: initial,
        epochs: Vec::new(),
        best_epoch: 0,
        best_valid_loss: initial,
    };
    let mut best = params.clone();
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&SampleWindow> = chunk.iter().map(|&i| &train_set[i]).collect();
            let value = accumulate_gradient(&params, &batch, &loss, config.l2_penalty, &mut grads, &mut ws)
                .map_err(|_| Error::Diverged { epoch })?;
            if !value.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            if let Some(max_norm) = config.clip_norm {
                let norm = linalg::norm(grads.as_slice());
                if norm > max_norm {
                    let s = max_norm / norm;
                    grads.as_mut_slice().iter_mut().for_each(|g| *g *= s);
                }
            }
            adam.update(params.as_mut_slice(), grads.as_slice(), config.learning_rate);
            epoch_loss += value;
            batches += 1;
        }
        let valid_loss = evaluate_loss(&params, valid_set, &loss).map_err(|_| Error::Diverged { epoch })?;
        if !valid_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        log.epochs.push(EpochLog {
            epoch,
            train_loss: epoch_loss / batches as f64,
            valid_loss,
        });
        if valid_loss < log.best_valid_loss {
            log.best_valid_loss = valid_loss;
            log.best_epoch = epoch;
            best.as_mut_slice().copy_from_slice(params.as_slice());
            stale = 0;
        } else {
            stale += 1;
            if stale > config.patience {
                break;
            }
        }
    }
    Ok((best, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Timestamp;

    /// Noisy sine continuation task.
    fn toy_windows(n: usize, steps: usize, seed: u64) -> Vec<SampleWindow> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| {
                let phase = rng.uniform(0.0, core::f64::consts::TAU);
                let f = |k: usize| crate::math::sin(phase + 0.3 * k as f64);
                let mut x = Vec::new();
                for k in 0..steps {
                    x.extend_from_slice(&[f(k) + 0.05 * rng.normal(), 0.0, 0.0]);
                }
                SampleWindow {
                    features: x,
                    history: steps,
                    target_prev: f(steps + 1),
                    target_final: f(steps + 2),
                    timestamp: Timestamp::from_secs(0),
                    day_index: 0,
                    segment_id: 0,
                }
            })
            .collect()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            max_epochs: 15,
            patience: 3,
            seed: 4,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_improves_validation_loss() {
        let tr = toy_windows(200, 8, 1);
        let va = toy_windows(60, 8, 2);
        let (best, log) = train(LstmParams::init(8, 3, 1), &tr, &va, &small_config()).unwrap();
        assert!(log.best_valid_loss < 0.5 * log.initial_valid_loss);
        assert_eq!(evaluate_loss(&best, &va, &CmseLoss::new(0.0)).unwrap(), log.best_valid_loss);
        for e in &log.epochs {
            assert!(log.best_valid_loss <= e.valid_loss);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let tr = toy_windows(80, 6, 3);
        let va = toy_windows(20, 6, 4);
        let cfg = TrainConfig {
            coherence: 2.0,
            ..small_config()
        };
        let a = train(LstmParams::init(5, 3, 7), &tr, &va, &cfg).unwrap();
        let b = train(LstmParams::init(5, 3, 7), &tr, &va, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_patience_stops_at_first_stale_epoch() {
        let tr = toy_windows(50, 6, 5);
        let va = toy_windows(20, 6, 6);
        // A huge learning rate makes validation worse right away.
        let cfg = TrainConfig {
            learning_rate: 5.0,
            patience: 0,
            max_epochs: 50,
            ..small_config()
        };
        let (_, log) = train(LstmParams::init(4, 3, 1), &tr, &va, &cfg).unwrap();
        let first_stale = log
            .epochs
            .iter()
            .position(|e| e.valid_loss >= {
                let prior = log.epochs.iter().take_while(|p| p.epoch < e.epoch).map(|p| p.valid_loss);
                prior.fold(log.initial_valid_loss, f64::min)
            })
            .unwrap();
        assert_eq!(log.epochs.len(), first_stale + 1);
    }

    #[test]
    fn empty_sets_are_rejected() {
        let tr = toy_windows(5, 4, 1);
        let p = LstmParams::init(2, 3, 1);
        assert!(train(p.clone(), &[], &tr, &small_config()).is_err());
        assert!(train(p, &tr, &[], &small_config()).is_err());
    }
}
