//! Forecasting models behind a common fit/predict contract.
//!
//! Kernel and feature models (ELM, GP, SVR) see the window flattened to a
//! `history * 3` vector and predict `t + PH` only; their `prev` output is the
//! same value. The recurrent models produce both outputs natively.

mod elm;
mod gp;
mod recurrent;
mod svr;

use alloc::vec::Vec;

pub use elm::{hidden_matrix, ridge_readout, Elm, ElmConfig, ElmSolve};
pub use gp::{Gp, GpConfig};
pub use recurrent::{LstmModel, RecurrentConfig};
pub use svr::{rbf, rbf_kernel_matrix, solve_svr_dual, Svr, SvrConfig, SvrSolution};

use crate::metrics::{PredictionTrace, TracePoint};
use crate::nnet::TwoStepPrediction;
use crate::preprocess::{SampleWindow, Scaler, WindowConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    /// Last observed glucose, a sanity baseline.
    Naive,
    Elm,
    Gp,
    Svr,
    Lstm,
    PcLstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Naive,
        ModelKind::Elm,
        ModelKind::Gp,
        ModelKind::Svr,
        ModelKind::Lstm,
        ModelKind::PcLstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Naive => "naive",
            ModelKind::Elm => "elm",
            ModelKind::Gp => "gp",
            ModelKind::Svr => "svr",
            ModelKind::Lstm => "lstm",
            ModelKind::PcLstm => "pclstm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Tag byte used in serialized model files.
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::Naive => 0,
            ModelKind::Elm => 1,
            ModelKind::Gp => 2,
            ModelKind::Svr => 3,
            ModelKind::Lstm => 4,
            ModelKind::PcLstm => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

/// A fitted model.
pub trait Predictor {
    fn kind(&self) -> ModelKind;

    fn predict_one(&self, window: &SampleWindow) -> Result<TwoStepPrediction>;

    fn predict(&self, windows: &[SampleWindow]) -> Result<Vec<TwoStepPrediction>> {
        windows.iter().map(|w| self.predict_one(w)).collect()
    }
}

/// Hyperparameters of one model, ready to fit.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Naive,
    Elm(ElmConfig),
    Gp(GpConfig),
    Svr(SvrConfig),
    /// Two-output LSTM; `PcLstm` and `Lstm` differ only in the default
    /// coherence factor.
    Recurrent { kind: ModelKind, config: RecurrentConfig },
}

/// Plain LSTM: the cMSE objective with coherence factor 0.
pub fn make_lstm() -> ModelSpec {
    ModelSpec::Recurrent {
        kind: ModelKind::Lstm,
        config: RecurrentConfig::lstm(),
    }
}

/// Prediction-coherent LSTM, coherence factor 2 by default.
pub fn make_pclstm() -> ModelSpec {
    ModelSpec::Recurrent {
        kind: ModelKind::PcLstm,
        config: RecurrentConfig::pclstm(),
    }
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Naive => ModelKind::Naive,
            ModelSpec::Elm(_) => ModelKind::Elm,
            ModelSpec::Gp(_) => ModelKind::Gp,
            ModelSpec::Svr(_) => ModelKind::Svr,
            ModelSpec::Recurrent { kind, .. } => *kind,
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Naive => ModelSpec::Naive,
            ModelKind::Elm => ModelSpec::Elm(ElmConfig::default()),
            ModelKind::Gp => ModelSpec::Gp(GpConfig::default()),
            ModelKind::Svr => ModelSpec::Svr(SvrConfig::default()),
            ModelKind::Lstm => make_lstm(),
            ModelKind::PcLstm => make_pclstm(),
        }
    }

    /// Fits on the training windows; the validation windows drive early
    /// stopping of the recurrent models and are ignored by the others.
    pub fn fit(&self, train: &[SampleWindow], valid: &[SampleWindow]) -> Result<FittedModel> {
        if train.is_empty() {
            return Err(Error::EmptyInput("training windows"));
        }
        Ok(match self {
            ModelSpec::Naive => FittedModel::Naive,
            ModelSpec::Elm(c) => FittedModel::Elm(c.fit(train)?),
            ModelSpec::Gp(c) => FittedModel::Gp(c.fit(train)?),
            ModelSpec::Svr(c) => FittedModel::Svr(c.fit(train)?),
            ModelSpec::Recurrent { kind, config } => FittedModel::Recurrent {
                kind: *kind,
                model: config.fit(train, valid)?,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Naive,
    Elm(Elm),
    Gp(Gp),
    Svr(Svr),
    Recurrent { kind: ModelKind, model: LstmModel },
}

impl Predictor for FittedModel {
    fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Naive => ModelKind::Naive,
            FittedModel::Elm(_) => ModelKind::Elm,
            FittedModel::Gp(_) => ModelKind::Gp,
            FittedModel::Svr(_) => ModelKind::Svr,
            FittedModel::Recurrent { kind, .. } => *kind,
        }
    }

    fn predict_one(&self, window: &SampleWindow) -> Result<TwoStepPrediction> {
        let single = |v: f64| {
            if v.is_finite() {
                Ok(TwoStepPrediction { prev: v, horizon: v })
            } else {
                Err(Error::NonFinite("prediction"))
            }
        };
        match self {
            FittedModel::Naive => single(window.last_glucose()),
            FittedModel::Elm(m) => single(m.predict_features(&window.features)),
            FittedModel::Gp(m) => single(m.predict_features(&window.features)),
            FittedModel::Svr(m) => single(m.predict_features(&window.features)),
            FittedModel::Recurrent { model, .. } => model.predict_one(window),
        }
    }

    fn predict(&self, windows: &[SampleWindow]) -> Result<Vec<TwoStepPrediction>> {
        match self {
            FittedModel::Recurrent { model, .. } => model.predict(windows),
            _ => windows.iter().map(|w| self.predict_one(w)).collect(),
        }
    }
}

/// Runs the model over ordered windows and maps the `t + PH` output back to
/// mg/dL. Points are stamped with the predicted time `t + PH`.
pub fn predict_trace<P: Predictor + ?Sized>(
    model: &P,
    windows: &[SampleWindow],
    scaler: &Scaler,
    window_config: &WindowConfig,
) -> Result<PredictionTrace> {
    let preds = model.predict(windows)?;
    Ok(trace_from_predictions(windows, &preds, scaler, window_config))
}

pub fn trace_from_predictions(
    windows: &[SampleWindow],
    preds: &[TwoStepPrediction],
    scaler: &Scaler,
    window_config: &WindowConfig,
) -> PredictionTrace {
    let minutes = window_config.horizon_minutes();
    PredictionTrace::new(
        windows
            .iter()
            .zip(preds)
            .map(|(w, p)| TracePoint {
                timestamp: w.timestamp.plus_minutes(minutes),
                y_true: scaler.glucose_to_mgdl(w.target_final),
                y_pred: scaler.glucose_to_mgdl(p.horizon),
                segment_id: w.segment_id,
            })
            .collect(),
    )
}

/// Stacks flattened window features into an `n x (history * 3)` matrix.
pub(crate) fn design_matrix(windows: &[SampleWindow]) -> Result<crate::linalg::Matrix> {
    let d = windows[0].features.len();
    let mut data = Vec::with_capacity(windows.len() * d);
    for w in windows {
        if w.features.len() != d {
            return Err(Error::LengthMismatch {
                what: "window feature length",
                left: w.features.len(),
                right: d,
            });
        }
        data.extend_from_slice(&w.features);
    }
    crate::linalg::Matrix::from_vec(windows.len(), d, data)
}

pub(crate) fn targets(windows: &[SampleWindow]) -> Vec<f64> {
    windows.iter().map(|w| w.target_final).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::rmse;
    use crate::time::Timestamp;
    use alloc::vec;

    fn window(last: f64, target: f64, i: i64) -> SampleWindow {
        SampleWindow {
            features: vec![0.0, 0.0, 0.0, last, 0.0, 0.0],
            history: 2,
            target_prev: target,
            target_final: target,
            timestamp: Timestamp::from_slot(i),
            day_index: 0,
            segment_id: 0,
        }
    }

    struct Oracle;

    impl Predictor for Oracle {
        fn kind(&self) -> ModelKind {
            ModelKind::Naive
        }

        fn predict_one(&self, w: &SampleWindow) -> Result<TwoStepPrediction> {
            Ok(TwoStepPrediction {
                prev: w.target_prev,
                horizon: w.target_final,
            })
        }
    }

    #[test]
    fn identity_model_trace_has_zero_error() {
        let ws: Vec<_> = (0..5).map(|i| window(0.0, i as f64 * 0.1, i)).collect();
        let scaler = Scaler {
            mean: [110.0, 0.0, 0.0],
            std: [10.0, 1.0, 1.0],
        };
        let t = predict_trace(&Oracle, &ws, &scaler, &WindowConfig::default()).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(rmse(&t).unwrap(), 0.0);
        assert_eq!(t.points[0].y_true, 110.0);
        assert_eq!(t.points[1].timestamp, Timestamp::from_slot(1).plus_minutes(30));
    }

    #[test]
    fn naive_model_predicts_last_glucose() {
        let scaler = Scaler {
            mean: [110.0, 0.0, 0.0],
            std: [10.0, 1.0, 1.0],
        };
        let ws = vec![window(0.0, 1.0, 0), window(2.0, 1.0, 1)];
        let m = ModelSpec::Naive.fit(&ws, &ws).unwrap();
        let t = predict_trace(&m, &ws, &scaler, &WindowConfig::default()).unwrap();
        assert_eq!(t.points[0].y_pred, 110.0);
        assert_eq!(t.points[1].y_pred, 130.0);
    }

    #[test]
    fn kinds_round_trip_through_tags_and_names() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::from_tag(k.tag()), Some(k));
            assert_eq!(ModelKind::parse(k.as_str()), Some(k));
            assert_eq!(ModelSpec::default_for(k).kind(), k);
        }
    }

    #[test]
    fn recurrent_defaults() {
        let ModelSpec::Recurrent { config, .. } = make_pclstm() else { unreachable!() };
        assert_eq!(config.train.coherence, 2.0);
        assert_eq!(config.units, 128);
        assert_eq!(config.train.learning_rate, 5e-3);
        assert_eq!(config.train.batch_size, 10);
        assert_eq!(config.train.l2_penalty, 1e-4);
        let ModelSpec::Recurrent { config, .. } = make_lstm() else { unreachable!() };
        assert_eq!(config.train.coherence, 0.0);
        assert_eq!(WindowConfig::default(), WindowConfig { history: 36, horizon: 6 });
    }
}
