//! Experiment configuration: one JSON document.
//!
//! ```json
//! {
//!   "data": { "synthetic": { "patients": 5, "seed": 42, "days": 16 } },
//!   "window": { "history": 36, "horizon": 6 },
//!   "models": [
//!     { "kind": "lstm", "units": 32 },
//!     { "kind": "pclstm", "units": 32, "coherence": [0, 1, 2] },
//!     { "kind": "elm", "neurons": 2000, "l2": [50, 500] }
//!   ],
//!   "smoothing": { "enabled": true, "window": 3 },
//!   "seed": 0
//! }
//! ```
//!
//! Any hyperparameter may be a single value or a list; lists span a grid
//! searched on the validation days. `data` holds either `synthetic` or
//! `csv` (`{ "dir": "...", "diabetes_type": "type1" }`).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use glyco_core::data::DiabetesType;
use glyco_core::models::{ElmConfig, GpConfig, ModelKind, ModelSpec, RecurrentConfig, SvrConfig};
use glyco_core::nnet::TrainConfig;
use glyco_core::pipeline::{PreprocessConfig, SelectionMetric};
use glyco_core::postprocess::Smoothing;
use glyco_core::preprocess::{SplitSpec, WindowConfig, DEFAULT_SPIKE_THRESHOLD};
use glyco_core::synth::{GammaKernel, SynthConfig, DEFAULT_JITTER};
use serde::{Deserialize, Serialize};

use crate::csv::parse_datetime;
use crate::error::{Error, Result};

pub const DEFAULT_OUTPUT_DIR: &str = "glyco-out";
pub const OUTPUT_ENV: &str = "GLYCO_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl<T> From<T> for OneOrMany<T> {
    fn from(v: T) -> Self {
        OneOrMany::One(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default = "default_spike_threshold")]
    pub spike_threshold: f64,
    pub models: Vec<ModelGrid>,
    #[serde(default)]
    pub smoothing: SmoothingSection,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Coherence factor of the validation cMSE that ranks pcLSTM cells.
    #[serde(default = "default_selection_coherence")]
    pub selection_coherence: f64,
}

fn default_spike_threshold() -> f64 {
    DEFAULT_SPIKE_THRESHOLD
}

fn default_selection_coherence() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSource),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub dir: PathBuf,
    #[serde(default = "default_diabetes_type")]
    pub diabetes_type: String,
}

fn default_diabetes_type() -> String {
    "type1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSource {
    pub patients: usize,
    /// Cohort seed; the experiment seed when absent.
    pub seed: Option<u64>,
    pub jitter: f64,
    pub days: usize,
    /// First timestamp, `YYYY-MM-DDTHH:MM:SS`.
    pub start: Option<String>,
    pub reading_interval_minutes: i64,
    pub meals_per_day: [u32; 2],
    pub cho_range: [f64; 2],
    pub bolus_per_10g: f64,
    pub baseline: f64,
    pub circadian_amplitude: f64,
    pub meal_peak_minutes: f64,
    pub meal_width_minutes: f64,
    pub insulin_peak_minutes: f64,
    pub insulin_width_minutes: f64,
    pub meal_gain: f64,
    pub insulin_gain: f64,
    pub noise_std: f64,
    pub ar_coefficient: f64,
    pub sensor_noise_std: f64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        let c = SynthConfig::default();
        Self {
            patients: 5,
            seed: None,
            jitter: DEFAULT_JITTER,
            days: c.days,
            start: None,
            reading_interval_minutes: c.reading_interval_minutes,
            meals_per_day: [c.meals_per_day.0, c.meals_per_day.1],
            cho_range: [c.cho_range.0, c.cho_range.1],
            bolus_per_10g: c.bolus_per_10g,
            baseline: c.baseline,
            circadian_amplitude: c.circadian_amplitude,
            meal_peak_minutes: c.meal_kernel.peak_minutes,
            meal_width_minutes: c.meal_kernel.width_minutes,
            insulin_peak_minutes: c.insulin_kernel.peak_minutes,
            insulin_width_minutes: c.insulin_kernel.width_minutes,
            meal_gain: c.meal_gain,
            insulin_gain: c.insulin_gain,
            noise_std: c.noise_std,
            ar_coefficient: c.ar_coefficient,
            sensor_noise_std: c.sensor_noise_std,
        }
    }
}

impl SyntheticSource {
    /// Base patient configuration (before per-patient jitter).
    pub fn synth_config(&self) -> Result<SynthConfig> {
        let mut c = SynthConfig {
            days: self.days,
            reading_interval_minutes: self.reading_interval_minutes,
            meals_per_day: (self.meals_per_day[0], self.meals_per_day[1]),
            cho_range: (self.cho_range[0], self.cho_range[1]),
            bolus_per_10g: self.bolus_per_10g,
            baseline: self.baseline,
            circadian_amplitude: self.circadian_amplitude,
            meal_kernel: GammaKernel {
                peak_minutes: self.meal_peak_minutes,
                width_minutes: self.meal_width_minutes,
            },
            insulin_kernel: GammaKernel {
                peak_minutes: self.insulin_peak_minutes,
                width_minutes: self.insulin_width_minutes,
            },
            meal_gain: self.meal_gain,
            insulin_gain: self.insulin_gain,
            noise_std: self.noise_std,
            ar_coefficient: self.ar_coefficient,
            sensor_noise_std: self.sensor_noise_std,
            ..SynthConfig::default()
        };
        if let Some(start) = &self.start {
            c.start = parse_datetime(start).ok_or_else(|| Error::Config(format!("invalid synthetic start `{start}`")))?;
        }
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub history: usize,
    pub horizon: usize,
}

impl Default for WindowSection {
    fn default() -> Self {
        let w = WindowConfig::default();
        Self {
            history: w.history,
            horizon: w.horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let s = SplitSpec::default();
        Self {
            train: s.train_fraction,
            valid: s.valid_fraction,
            test: s.test_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingSection {
    pub enabled: bool,
    pub window: usize,
}

impl Default for SmoothingSection {
    fn default() -> Self {
        Self {
            enabled: true,
            window: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelGrid {
    Naive(NaiveGrid),
    Elm(ElmGrid),
    Gp(GpGrid),
    Svr(SvrGrid),
    Lstm(RecurrentGrid),
    Pclstm(RecurrentGrid),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveGrid {
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElmGrid {
    pub name: Option<String>,
    pub neurons: OneOrMany<usize>,
    pub l2: OneOrMany<f64>,
}

impl Default for ElmGrid {
    fn default() -> Self {
        let c = ElmConfig::default();
        Self {
            name: None,
            neurons: c.neurons.into(),
            l2: c.l2.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpGrid {
    pub name: Option<String>,
    pub sigma0_sq: OneOrMany<f64>,
    pub noise: OneOrMany<f64>,
}

impl Default for GpGrid {
    fn default() -> Self {
        let c = GpConfig::default();
        Self {
            name: None,
            sigma0_sq: c.sigma0_sq.into(),
            noise: c.noise.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrGrid {
    pub name: Option<String>,
    pub gamma: OneOrMany<f64>,
    pub epsilon: OneOrMany<f64>,
    pub c: OneOrMany<f64>,
    pub tolerance: f64,
    pub max_iterations: Option<usize>,
}

impl Default for SvrGrid {
    fn default() -> Self {
        let c = SvrConfig::default();
        Self {
            name: None,
            gamma: c.gamma.into(),
            epsilon: c.epsilon.into(),
            c: c.c.into(),
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecurrentGrid {
    pub name: Option<String>,
    pub units: OneOrMany<usize>,
    pub learning_rate: OneOrMany<f64>,
    pub batch_size: OneOrMany<usize>,
    pub l2: OneOrMany<f64>,
    /// Defaults to 2 for `pclstm`; `lstm` only accepts 0.
    pub coherence: Option<OneOrMany<f64>>,
    pub both_steps: bool,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: Option<f64>,
}

impl Default for RecurrentGrid {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            name: None,
            units: 128.into(),
            learning_rate: t.learning_rate.into(),
            batch_size: t.batch_size.into(),
            l2: t.l2_penalty.into(),
            coherence: None,
            both_steps: t.both_steps,
            max_epochs: t.max_epochs,
            patience: t.patience,
            clip_norm: t.clip_norm,
        }
    }
}

/// One grid cell: a model specification and a readable parameter label.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub spec: ModelSpec,
    pub label: String,
}

fn product<A: Clone, B: Clone>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter().flat_map(|x| b.iter().map(move |y| (x.clone(), y.clone()))).collect()
}

fn non_empty<T: Clone>(name: &str, field: &str, v: &OneOrMany<T>) -> Result<Vec<T>> {
    let values = v.values();
    if values.is_empty() {
        return Err(Error::Config(format!("model `{name}`: grid `{field}` is empty")));
    }
    Ok(values)
}

impl ModelGrid {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelGrid::Naive(_) => ModelKind::Naive,
            ModelGrid::Elm(_) => ModelKind::Elm,
            ModelGrid::Gp(_) => ModelKind::Gp,
            ModelGrid::Svr(_) => ModelKind::Svr,
            ModelGrid::Lstm(_) => ModelKind::Lstm,
            ModelGrid::Pclstm(_) => ModelKind::PcLstm,
        }
    }

    /// Model name used in file names and reports; the kind by default.
    pub fn name(&self) -> String {
        let explicit = match self {
            ModelGrid::Naive(g) => &g.name,
            ModelGrid::Elm(g) => &g.name,
            ModelGrid::Gp(g) => &g.name,
            ModelGrid::Svr(g) => &g.name,
            ModelGrid::Lstm(g) | ModelGrid::Pclstm(g) => &g.name,
        };
        explicit.clone().unwrap_or_else(|| self.kind().as_str().to_string())
    }

    pub fn selection_metric(&self, selection_coherence: f64) -> SelectionMetric {
        match self {
            ModelGrid::Pclstm(_) => SelectionMetric::Cmse {
                coherence: selection_coherence,
            },
            _ => SelectionMetric::Rmse,
        }
    }

    /// Cartesian product of the hyperparameter lists, in declaration order.
    pub fn cells(&self, seed: u64) -> Result<Vec<GridCell>> {
        let name = self.name();
        let cells = match self {
            ModelGrid::Naive(_) => vec![GridCell {
                spec: ModelSpec::Naive,
                label: String::new(),
            }],
            ModelGrid::Elm(g) => product(&non_empty(&name, "neurons", &g.neurons)?, &non_empty(&name, "l2", &g.l2)?)
                .into_iter()
                .map(|(neurons, l2)| GridCell {
                    spec: ModelSpec::Elm(ElmConfig {
                        neurons,
                        l2,
                        seed,
                        ..ElmConfig::default()
                    }),
                    label: format!("neurons={neurons};l2={l2}"),
                })
                .collect(),
            ModelGrid::Gp(g) => product(&non_empty(&name, "sigma0_sq", &g.sigma0_sq)?, &non_empty(&name, "noise", &g.noise)?)
                .into_iter()
                .map(|(sigma0_sq, noise)| GridCell {
                    spec: ModelSpec::Gp(GpConfig { sigma0_sq, noise }),
                    label: format!("sigma0_sq={sigma0_sq};noise={noise}"),
                })
                .collect(),
            ModelGrid::Svr(g) => {
                let ge = product(&non_empty(&name, "gamma", &g.gamma)?, &non_empty(&name, "epsilon", &g.epsilon)?);
                product(&ge, &non_empty(&name, "c", &g.c)?)
                    .into_iter()
                    .map(|((gamma, epsilon), c)| GridCell {
                        spec: ModelSpec::Svr(SvrConfig {
                            gamma,
                            epsilon,
                            c,
                            tolerance: g.tolerance,
                            max_iterations: g.max_iterations,
                        }),
                        label: format!("gamma={gamma};epsilon={epsilon};c={c}"),
                    })
                    .collect()
            }
            ModelGrid::Lstm(g) | ModelGrid::Pclstm(g) => {
                let kind = self.kind();
                let coherence = match (&g.coherence, kind) {
                    (None, ModelKind::Lstm) => vec![0.0],
                    (None, _) => vec![2.0],
                    (Some(c), _) => non_empty(&name, "coherence", c)?,
                };
                if kind == ModelKind::Lstm && coherence.iter().any(|&c| c != 0.0) {
                    return Err(Error::Config(format!(
                        "model `{name}`: plain lstm trains with coherence 0; use kind `pclstm` for c > 0"
                    )));
                }
                let a = product(&non_empty(&name, "units", &g.units)?, &non_empty(&name, "learning_rate", &g.learning_rate)?);
                let b = product(&non_empty(&name, "batch_size", &g.batch_size)?, &non_empty(&name, "l2", &g.l2)?);
                let ab = product(&a, &b);
                product(&ab, &coherence)
                    .into_iter()
                    .map(|(((units, learning_rate), (batch_size, l2_penalty)), coherence)| GridCell {
                        spec: ModelSpec::Recurrent {
                            kind,
                            config: RecurrentConfig {
                                units,
                                train: TrainConfig {
                                    learning_rate,
                                    batch_size,
                                    l2_penalty,
                                    coherence,
                                    both_steps: g.both_steps,
                                    max_epochs: g.max_epochs,
                                    patience: g.patience,
                                    clip_norm: g.clip_norm,
                                    seed,
                                },
                            },
                        },
                        label: format!(
                            "units={units};lr={learning_rate};batch={batch_size};l2={l2_penalty};c={coherence}"
                        ),
                    })
                    .collect()
            }
        };
        Ok(cells)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn window(&self) -> WindowConfig {
        WindowConfig {
            history: self.window.history,
            horizon: self.window.horizon,
        }
    }

    pub fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig {
            window: self.window(),
            split: SplitSpec {
                train_fraction: self.split.train,
                valid_fraction: self.split.valid,
                test_fraction: self.split.test,
            },
            spike_threshold: self.spike_threshold,
        }
    }

    pub fn smoothing(&self) -> Option<Smoothing> {
        self.smoothing.enabled.then_some(Smoothing::MovingAverage {
            window: self.smoothing.window,
        })
    }

    pub fn diabetes_type(&self) -> Result<DiabetesType> {
        match &self.data {
            DataSource::Synthetic(_) => Ok(DiabetesType::Synthetic),
            DataSource::Csv(c) => match c.diabetes_type.as_str() {
                "type1" => Ok(DiabetesType::Type1),
                "type2" => Ok(DiabetesType::Type2),
                "synthetic" => Ok(DiabetesType::Synthetic),
                other => Err(Error::Config(format!("unknown diabetes_type `{other}`"))),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        self.window().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.preprocess().split.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.spike_threshold.is_nan() || self.spike_threshold <= 0.0 {
            return err(format!("spike_threshold must be > 0, got {}", self.spike_threshold));
        }
        if self.smoothing.window == 0 {
            return err("smoothing window must be >= 1".into());
        }
        if self.selection_coherence.is_nan() || self.selection_coherence < 0.0 {
            return err(format!("selection_coherence must be >= 0, got {}", self.selection_coherence));
        }
        if self.models.is_empty() {
            return err("no models configured".into());
        }
        let mut names = BTreeSet::new();
        for m in &self.models {
            let name = m.name();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return err(format!("model name `{name}` must be non-empty [A-Za-z0-9_-]"));
            }
            if !names.insert(name.clone()) {
                return err(format!("duplicate model name `{name}`"));
            }
            m.cells(self.seed)?;
        }
        self.diabetes_type()?;
        if let DataSource::Synthetic(s) = &self.data {
            if s.patients == 0 {
                return err("synthetic cohort needs at least one patient".into());
            }
            if !(0.0..1.0).contains(&s.jitter) {
                return err(format!("jitter must lie in [0, 1), got {}", s.jitter));
            }
            s.synth_config()?;
        }
        Ok(())
    }

    /// `--out`, then `GLYCO_OUT`, then the config, then `glyco-out`.
    pub fn resolve_output_dir(&self, cli: Option<&Path>, env: Option<&str>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(e) = env.filter(|e| !e.is_empty()) {
            return PathBuf::from(e);
        }
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}
