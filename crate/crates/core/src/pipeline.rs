//! Per-patient pipeline stages: preprocessing, model selection on the
//! validation days, and test-set evaluation. Each function is pure, so a
//! runner may execute patients or grid cells in any order or in parallel.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::PatientRecord;
use crate::metrics::{cg_ega_report, CgEgaReport, PredictionTrace};
use crate::models::{predict_trace, FittedModel, ModelSpec, Predictor};
use crate::nnet::{loss_mse, CmseLoss, TwoStepPrediction};
use crate::postprocess::Smoothing;
use crate::preprocess::{
    apply_scaler, build_windows, fit_scaler, pchip_interpolate, remove_incomplete_days, remove_spikes, resample_5min,
    split_days, DaySplit, SampleWindow, Scaler, SplitSpec, UniformSeries, WindowConfig, DEFAULT_SPIKE_THRESHOLD,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub window: WindowConfig,
    pub split: SplitSpec,
    pub spike_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            split: SplitSpec::default(),
            spike_threshold: DEFAULT_SPIKE_THRESHOLD,
        }
    }
}

/// A patient ready for modelling.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedPatient {
    pub patient_id: String,
    /// Cleaned and interpolated series in physical units.
    pub series: UniformSeries,
    pub split: DaySplit,
    pub scaler: Scaler,
    pub train: Vec<SampleWindow>,
    pub valid: Vec<SampleWindow>,
    pub test: Vec<SampleWindow>,
}

/// Resampling, day cleaning, spike removal and gap filling.
pub fn clean_series(record: &PatientRecord, spike_threshold: f64) -> Result<UniformSeries> {
    let series = resample_5min(record);
    if series.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let series = remove_incomplete_days(&series)?;
    let series = remove_spikes(&series, spike_threshold);
    pchip_interpolate(&series)
}

pub fn prepare_patient(record: &PatientRecord, config: &PreprocessConfig) -> Result<PreparedPatient> {
    config.window.validate()?;
    config.split.validate()?;
    let series = clean_series(record, config.spike_threshold)?;
    let split = split_days(&series, &config.split)?;
    let scaler = fit_scaler(&series, &split.train)?;
    let scaled = apply_scaler(&series, &scaler);
    let windows = |days: &[i64], what: &'static str| {
        let w = build_windows(&scaled, &config.window, days);
        if w.is_empty() {
            Err(Error::EmptyInput(what))
        } else {
            Ok(w)
        }
    };
    Ok(PreparedPatient {
        patient_id: record.patient_id.clone(),
        train: windows(&split.train, "training windows")?,
        valid: windows(&split.valid, "validation windows")?,
        test: windows(&split.test, "test windows")?,
        series,
        split,
        scaler,
    })
}

/// Criterion used to rank grid cells on the validation windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMetric {
    /// RMSE of the `t + PH` output (standardized units, same ranking as mg/dL).
    Rmse,
    /// cMSE at a fixed coherence factor, identical for every cell so cells
    /// with different `c` stay comparable.
    Cmse { coherence: f64 },
}

impl SelectionMetric {
    pub fn score(&self, preds: &[TwoStepPrediction], windows: &[SampleWindow]) -> Result<f64> {
        match *self {
            SelectionMetric::Rmse => {
                let p: Vec<f64> = preds.iter().map(|p| p.horizon).collect();
                let t: Vec<f64> = windows.iter().map(|w| w.target_final).collect();
                Ok(crate::math::sqrt(loss_mse(&p, &t)?))
            }
            SelectionMetric::Cmse { coherence } => {
                let t: Vec<(f64, f64)> = windows.iter().map(|w| (w.target_prev, w.target_final)).collect();
                CmseLoss::new(coherence).value(preds, &t)
            }
        }
    }
}

/// A fitted grid cell and its validation score.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub index: usize,
    pub spec: ModelSpec,
    pub score: f64,
    pub model: FittedModel,
}

pub fn fit_cell(
    index: usize,
    spec: &ModelSpec,
    patient: &PreparedPatient,
    metric: SelectionMetric,
) -> Result<CellResult> {
    let model = spec.fit(&patient.train, &patient.valid)?;
    let preds = model.predict(&patient.valid)?;
    let score = metric.score(&preds, &patient.valid)?;
    if !score.is_finite() {
        return Err(Error::NonFinite("validation score"));
    }
    Ok(CellResult {
        index,
        spec: spec.clone(),
        score,
        model,
    })
}

/// Lowest validation score; ties go to the earliest cell.
pub fn select_best(cells: Vec<CellResult>) -> Option<CellResult> {
    cells.into_iter().reduce(|best, c| {
        if c.score < best.score || (c.score == best.score && c.index < best.index) {
            c
        } else {
            best
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub trace: PredictionTrace,
    pub report: CgEgaReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestEvaluation {
    pub raw: Evaluation,
    pub smoothed: Option<Evaluation>,
}

/// Test-set metrics of a fitted model, raw and optionally smoothed.
pub fn evaluate_on_test<P: Predictor + ?Sized>(
    model: &P,
    patient: &PreparedPatient,
    window: &WindowConfig,
    smoothing: Option<Smoothing>,
) -> Result<TestEvaluation> {
    let trace = predict_trace(model, &patient.test, &patient.scaler, window)?;
    let report = cg_ega_report(&trace)?;
    let smoothed = match smoothing {
        Some(s) => {
            let trace = s.apply(&trace);
            let report = cg_ega_report(&trace)?;
            Some(Evaluation { trace, report })
        }
        None => None,
    };
    Ok(TestEvaluation {
        raw: Evaluation { trace, report },
        smoothed,
    })
}

/// Mean and population standard deviation; `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, crate::math::sqrt(var)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ElmConfig, GpConfig};
    use crate::synth::{generate_patient, SynthConfig};

    fn patient() -> PreparedPatient {
        let record = generate_patient(&SynthConfig {
            days: 8,
            seed: 11,
            ..SynthConfig::default()
        })
        .unwrap();
        prepare_patient(&record, &PreprocessConfig::default()).unwrap()
    }

    #[test]
    fn synthetic_patient_prepares_cleanly() {
        let p = patient();
        assert_eq!(p.split.train.len(), 4);
        assert_eq!(p.split.valid.len(), 2);
        assert_eq!(p.split.test.len(), 2);
        // One window per t with 35 steps of history and 6 ahead, per day.
        assert_eq!(p.test.len(), 2 * (288 - 35 - 6));
        assert!(p.train.iter().all(|w| w.features.len() == 36 * 3));
    }

    #[test]
    fn gp_beats_naive_on_synthetic_data() {
        let p = patient();
        let window = WindowConfig::default();
        let naive = ModelSpec::Naive.fit(&p.train, &p.valid).unwrap();
        let gp = ModelSpec::Gp(GpConfig::default()).fit(&p.train, &p.valid).unwrap();
        let rn = evaluate_on_test(&naive, &p, &window, None).unwrap().raw.report.rmse;
        let rg = evaluate_on_test(&gp, &p, &window, None).unwrap().raw.report.rmse;
        assert!(rg < rn, "gp {rg} vs naive {rn}");
    }

    #[test]
    fn selection_prefers_the_lower_score() {
        let p = patient();
        let specs = [
            ModelSpec::Elm(ElmConfig {
                neurons: 50,
                l2: 1e6,
                ..ElmConfig::default()
            }),
            ModelSpec::Elm(ElmConfig {
                neurons: 50,
                l2: 1.0,
                ..ElmConfig::default()
            }),
        ];
        let cells: Vec<_> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| fit_cell(i, s, &p, SelectionMetric::Rmse).unwrap())
            .collect();
        let lowest = cells.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
        assert_eq!(select_best(cells).unwrap().score, lowest);
    }

    #[test]
    fn smoothing_lowers_drmse() {
        let p = patient();
        let naive = ModelSpec::Naive.fit(&p.train, &p.valid).unwrap();
        let e = evaluate_on_test(&naive, &p, &WindowConfig::default(), Some(Smoothing::default())).unwrap();
        assert!(e.smoothed.unwrap().report.drmse < e.raw.report.drmse);
    }

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[1.0, 3.0]), Some((2.0, 1.0)));
        assert_eq!(mean_std(&[]), None);
    }
}
