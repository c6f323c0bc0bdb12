use alloc::vec::Vec;

use crate::nnet::{lstm_forward, train, ForwardCache, LstmParams, TrainConfig, TrainingLog, TwoStepPrediction};
use crate::preprocess::{SampleWindow, CHANNELS};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrentConfig {
    pub units: usize,
    pub train: TrainConfig,
}

impl RecurrentConfig {
    pub fn lstm() -> Self {
        Self {
            units: 128,
            train: TrainConfig::default(),
        }
    }

    pub fn pclstm() -> Self {
        Self {
            units: 128,
            train: TrainConfig {
                coherence: 2.0,
                ..TrainConfig::default()
            },
        }
    }

    pub fn fit(&self, train_set: &[SampleWindow], valid_set: &[SampleWindow]) -> Result<LstmModel> {
        let init = LstmParams::init(self.units, CHANNELS.len(), self.train.seed);
        let (params, log) = train(init, train_set, valid_set, &self.train)?;
        Ok(LstmModel { params, log: Some(log) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub params: LstmParams,
    /// Present when the model was trained in this process.
    pub log: Option<TrainingLog>,
}

impl LstmModel {
    pub fn predict_one(&self, window: &SampleWindow) -> Result<TwoStepPrediction> {
        lstm_forward(&self.params, &window.features, &mut ForwardCache::default())
    }

    pub fn predict(&self, windows: &[SampleWindow]) -> Result<Vec<TwoStepPrediction>> {
        let mut cache = ForwardCache::default();
        windows
            .iter()
            .map(|w| lstm_forward(&self.params, &w.features, &mut cache))
            .collect()
    }
}
