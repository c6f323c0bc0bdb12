//! Experiment runner: loads a cohort, runs the per-patient pipeline (possibly
//! in parallel) and writes all artifacts single-threaded afterwards.
//!
//! Output layout under the output directory:
//!
//! ```text
//! raw/<patient>.csv                       synth
//! preprocessed/<patient>.csv              preprocess
//! models/<patient>/<model>.bin, grid.csv  train
//! traces/<patient>/<model>_<smoothing>.csv,
//! ega/<patient>/<model>_<smoothing>.csv,
//! report.csv                              evaluate
//! summary.csv, summary.txt, plots/        report
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use glyco_core::data::PatientRecord;
use glyco_core::metrics::{cg_ega_points, drmse_per_minute, CgEgaReport, GlycemicRegion};
use glyco_core::models::{FittedModel, ModelKind};
use glyco_core::pipeline::{evaluate_on_test, fit_cell, prepare_patient, select_best, PreparedPatient, TestEvaluation};
use glyco_core::synth::generate_cohort_with_jitter;
use rayon::prelude::*;

use crate::config::{DataSource, ExperimentConfig};
use crate::csv::{self, write_file};
use crate::error::{Error, Result};
use crate::format::{load_model, save_model};

/// Patients processed and the ones that failed, with reasons.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub patients: usize,
    pub failures: Vec<(String, String)>,
}

impl Outcome {
    pub fn succeeded(&self) -> usize {
        self.patients - self.failures.len()
    }

    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    fn record<T>(&mut self, id: &str, r: &Result<T>) {
        self.patients += 1;
        if let Err(e) = r {
            log::error!("patient {id} failed: {e}");
            self.failures.push((id.to_string(), e.to_string()));
        }
    }
}

/// A patient whose raw data could or could not be loaded.
pub type LoadedPatient = (String, Result<PatientRecord>);

pub fn load_cohort(config: &ExperimentConfig) -> Result<Vec<LoadedPatient>> {
    match &config.data {
        DataSource::Synthetic(s) => {
            let base = s.synth_config()?;
            let cohort = generate_cohort_with_jitter(s.patients, &base, s.seed.unwrap_or(config.seed), s.jitter)?;
            for r in &cohort {
                for note in &r.notes {
                    log::warn!("{}: {note}", r.patient_id);
                }
            }
            Ok(cohort.into_iter().map(|r| (r.patient_id.clone(), Ok(r))).collect())
        }
        DataSource::Csv(c) => {
            let diabetes_type = config.diabetes_type()?;
            let files = csv::patient_files(&c.dir)?;
            if files.is_empty() {
                return Err(Error::Config(format!("no *.csv files in {}", c.dir.display())));
            }
            Ok(files
                .iter()
                .map(|f| {
                    let id = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    (id, csv::read_patient_csv(f, diabetes_type))
                })
                .collect())
        }
    }
}

fn prepare(config: &ExperimentConfig, record: &Result<PatientRecord>) -> Result<PreparedPatient> {
    match record {
        Ok(r) => {
            let violations = glyco_core::data::validate(r);
            if let Some(v) = violations.first() {
                return Err(Error::Core(glyco_core::Error::InvalidArgument(format!(
                    "{} invalid record entries, first: {}",
                    violations.len(),
                    v.message
                ))));
            }
            Ok(prepare_patient(r, &config.preprocess())?)
        }
        Err(e) => Err(Error::Core(glyco_core::Error::InvalidArgument(e.to_string()))),
    }
}

/// Validation score of one grid cell, or why it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub label: String,
    pub score: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub name: String,
    pub kind: ModelKind,
    pub cells: Vec<CellScore>,
    pub selected: usize,
    pub model: FittedModel,
}

/// Grid search of every configured model on one prepared patient.
pub fn train_patient(config: &ExperimentConfig, patient: &PreparedPatient) -> Result<Vec<TrainedModel>> {
    config
        .models
        .iter()
        .map(|grid| {
            let name = grid.name();
            let metric = grid.selection_metric(config.selection_coherence);
            let cells = grid.cells(config.seed)?;
            let fitted: Vec<_> = cells
                .par_iter()
                .enumerate()
                .map(|(i, cell)| fit_cell(i, &cell.spec, patient, metric))
                .collect();
            let scores = cells
                .iter()
                .zip(&fitted)
                .map(|(cell, r)| CellScore {
                    label: cell.label.clone(),
                    score: r.as_ref().map(|c| c.score).map_err(|e| e.to_string()),
                })
                .collect();
            let mut last_error = None;
            let ok: Vec<_> = fitted
                .into_iter()
                .filter_map(|r| r.map_err(|e| last_error = Some(e)).ok())
                .collect();
            let best = select_best(ok).ok_or_else(|| {
                let e = last_error.map(|e| e.to_string()).unwrap_or_default();
                Error::Core(glyco_core::Error::InvalidArgument(format!("every grid cell of `{name}` failed: {e}")))
            })?;
            Ok(TrainedModel {
                name,
                kind: grid.kind(),
                cells: scores,
                selected: best.index,
                model: best.model,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedModel {
    pub name: String,
    pub evaluation: TestEvaluation,
}

pub fn evaluate_patient(
    config: &ExperimentConfig,
    patient: &PreparedPatient,
    models: &[(String, FittedModel)],
) -> Result<Vec<EvaluatedModel>> {
    models
        .iter()
        .map(|(name, model)| {
            Ok(EvaluatedModel {
                name: name.clone(),
                evaluation: evaluate_on_test(model, patient, &config.window(), config.smoothing())?,
            })
        })
        .collect()
}

/// Everything computed for one patient by the full pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRun {
    pub patient: PreparedPatient,
    pub trained: Vec<TrainedModel>,
    pub evaluated: Vec<EvaluatedModel>,
}

pub fn run_patient(config: &ExperimentConfig, record: &Result<PatientRecord>) -> Result<PatientRun> {
    let patient = prepare(config, record)?;
    let trained = train_patient(config, &patient)?;
    let models: Vec<_> = trained.iter().map(|t| (t.name.clone(), t.model.clone())).collect();
    let evaluated = evaluate_patient(config, &patient, &models)?;
    Ok(PatientRun {
        patient,
        trained,
        evaluated,
    })
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn par_patients<T: Send>(
    cohort: &[LoadedPatient],
    jobs: Option<usize>,
    f: impl Fn(&Result<PatientRecord>) -> Result<T> + Sync + Send,
) -> Result<Vec<Result<T>>> {
    in_pool(jobs, || cohort.par_iter().map(|(_, r)| f(r)).collect())
}

/// Stage `synth`: writes the raw CSV of every synthetic patient.
pub fn run_synth(config: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    if !matches!(config.data, DataSource::Synthetic(_)) {
        return Err(Error::Config("`synth` needs a synthetic data source".into()));
    }
    let mut outcome = Outcome::default();
    for (id, record) in load_cohort(config)? {
        outcome.record(&id, &record);
        if let Ok(r) = record {
            write_file(&out.join("raw").join(format!("{id}.csv")), &csv::patient_csv(&r))?;
        }
    }
    Ok(outcome)
}

/// Stage `preprocess`: writes the cleaned, split series of every patient.
pub fn run_preprocess(config: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<Outcome> {
    let cohort = load_cohort(config)?;
    let prepared = par_patients(&cohort, jobs, |r| prepare(config, r))?;
    let mut outcome = Outcome::default();
    for ((id, _), p) in cohort.iter().zip(prepared) {
        outcome.record(id, &p);
        if let Ok(p) = p {
            write_file(&out.join("preprocessed").join(format!("{id}.csv")), &csv::preprocessed_csv(&p))?;
        }
    }
    Ok(outcome)
}

pub fn model_path(out: &Path, patient: &str, model: &str) -> PathBuf {
    out.join("models").join(patient).join(format!("{model}.bin"))
}

pub const GRID_HEADER: &str = "patient,model,cell,params,score,selected";

fn grid_rows(buf: &mut String, patient: &str, trained: &[TrainedModel]) {
    for t in trained {
        for (i, c) in t.cells.iter().enumerate() {
            let score = match &c.score {
                Ok(s) => s.to_string(),
                Err(_) => "failed".into(),
            };
            let _ = writeln!(buf, "{patient},{},{i},{},{score},{}", t.name, c.label, u8::from(i == t.selected));
        }
    }
}

fn write_trained(out: &Path, config: &ExperimentConfig, id: &str, trained: &[TrainedModel]) -> Result<()> {
    for t in trained {
        save_model(&model_path(out, id, &t.name), &t.model, config.window.history)?;
    }
    Ok(())
}

/// Stage `train`: grid search per patient, saves the selected models.
pub fn run_train(config: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<Outcome> {
    let cohort = load_cohort(config)?;
    let results = par_patients(&cohort, jobs, |r| {
        let p = prepare(config, r)?;
        train_patient(config, &p)
    })?;
    let mut outcome = Outcome::default();
    let mut grid = format!("{GRID_HEADER}\n");
    for ((id, _), r) in cohort.iter().zip(results) {
        outcome.record(id, &r);
        if let Ok(trained) = r {
            write_trained(out, config, id, &trained)?;
            grid_rows(&mut grid, id, &trained);
        }
    }
    write_file(&out.join("grid.csv"), &grid)?;
    Ok(outcome)
}

pub fn trace_path(out: &Path, patient: &str, model: &str, smoothing: &str) -> PathBuf {
    out.join("traces").join(patient).join(format!("{model}_{smoothing}.csv"))
}

pub fn ega_path(out: &Path, patient: &str, model: &str, smoothing: &str) -> PathBuf {
    out.join("ega").join(patient).join(format!("{model}_{smoothing}.csv"))
}

pub const RAW: &str = "raw";
pub const SMOOTHED: &str = "smoothed";

/// Writes traces and scatter files and appends the report rows.
fn write_evaluated(out: &Path, id: &str, evaluated: &[EvaluatedModel], rows: &mut Vec<ReportRow>) -> Result<()> {
    for m in evaluated {
        let variants = [(RAW, Some(&m.evaluation.raw)), (SMOOTHED, m.evaluation.smoothed.as_ref())];
        for (label, eval) in variants {
            let Some(eval) = eval else { continue };
            write_file(&trace_path(out, id, &m.name, label), &csv::trace_csv(&eval.trace))?;
            write_file(&ega_path(out, id, &m.name, label), &csv::ega_csv(&cg_ega_points(&eval.trace)))?;
            rows.push(ReportRow::new(
                id,
                &m.name,
                label,
                &eval.report,
                drmse_per_minute(&eval.trace).unwrap_or(f64::NAN),
            ));
        }
    }
    Ok(())
}

/// Stage `evaluate`: scores the saved models on the test days.
pub fn run_evaluate(config: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<Outcome> {
    let cohort = load_cohort(config)?;
    let names: Vec<String> = config.models.iter().map(|m| m.name()).collect();
    let results = in_pool(jobs, || {
        cohort
            .par_iter()
            .map(|(id, r)| {
                let p = prepare(config, r)?;
                let models = names
                    .iter()
                    .map(|n| Ok((n.clone(), load_model(&model_path(out, id, n))?)))
                    .collect::<Result<Vec<_>>>()?;
                evaluate_patient(config, &p, &models)
            })
            .collect::<Vec<_>>()
    })?;
    let mut outcome = Outcome::default();
    let mut rows = Vec::new();
    for ((id, _), r) in cohort.iter().zip(results) {
        outcome.record(id, &r);
        if let Ok(evaluated) = r {
            write_evaluated(out, id, &evaluated, &mut rows)?;
        }
    }
    write_file(&out.join("report.csv"), &report_csv(&rows))?;
    Ok(outcome)
}

/// Stage `grid`: the whole pipeline, then the report.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, jobs: Option<usize>) -> Result<Outcome> {
    let cohort = load_cohort(config)?;
    let runs = par_patients(&cohort, jobs, |r| run_patient(config, r))?;
    let mut outcome = Outcome::default();
    let mut grid = format!("{GRID_HEADER}\n");
    let mut rows = Vec::new();
    for ((id, _), run) in cohort.iter().zip(runs) {
        outcome.record(id, &run);
        if let Ok(run) = run {
            write_file(&out.join("preprocessed").join(format!("{id}.csv")), &csv::preprocessed_csv(&run.patient))?;
            write_trained(out, config, id, &run.trained)?;
            grid_rows(&mut grid, id, &run.trained);
            write_evaluated(out, id, &run.evaluated, &mut rows)?;
        }
    }
    write_file(&out.join("grid.csv"), &grid)?;
    write_file(&out.join("report.csv"), &report_csv(&rows))?;
    if outcome.succeeded() > 0 {
        crate::render::run_report(out)?;
    }
    Ok(outcome)
}

/// One row of `report.csv`. Percentages are `None` for empty regions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub patient: String,
    pub model: String,
    pub smoothing: String,
    pub rmse: f64,
    pub drmse: f64,
    /// `[overall, hypo, eu, hyper]`, each `(AP, BE, EP)` in percent.
    pub rates: [Option<(f64, f64, f64)>; 4],
    pub drmse_per_min: f64,
    pub points: usize,
}

pub const REPORT_HEADER: &str = "patient,model,smoothing,rmse,drmse,ap,be,ep,hypo_ap,hypo_be,hypo_ep,eu_ap,eu_be,eu_ep,hyper_ap,hyper_be,hyper_ep,drmse_per_min,points";

impl ReportRow {
    pub fn new(patient: &str, model: &str, smoothing: &str, r: &CgEgaReport, drmse_per_min: f64) -> Self {
        let mut rates = [r.overall.percentages(), None, None, None];
        for (slot, region) in rates[1..].iter_mut().zip(GlycemicRegion::ALL) {
            *slot = r.region(region).percentages();
        }
        ReportRow {
            patient: patient.into(),
            model: model.into(),
            smoothing: smoothing.into(),
            rmse: r.rmse,
            drmse: r.drmse,
            rates,
            drmse_per_min,
            points: r.overall.total(),
        }
    }

    pub fn ap(&self) -> Option<f64> {
        self.rates[0].map(|r| r.0)
    }
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let _ = write!(out, "{},{},{},{},{}", r.patient, r.model, r.smoothing, r.rmse, r.drmse);
        for rate in &r.rates {
            match rate {
                Some((a, b, e)) => {
                    let _ = write!(out, ",{a},{b},{e}");
                }
                None => out.push_str(",,,"),
            }
        }
        let _ = writeln!(out, ",{},{}", r.drmse_per_min, r.points);
    }
    out
}

pub fn parse_report_csv(text: &str, path: &Path) -> Result<Vec<ReportRow>> {
    let bad = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == REPORT_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{REPORT_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 19 {
            return Err(bad(line_no, format!("expected 19 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line_no, format!("invalid number `{s}`")));
        let mut rates = [None; 4];
        for (k, rate) in rates.iter_mut().enumerate() {
            let t = &f[5 + 3 * k..8 + 3 * k];
            if t.iter().all(|s| s.is_empty()) {
                continue;
            }
            *rate = Some((num(t[0])?, num(t[1])?, num(t[2])?));
        }
        rows.push(ReportRow {
            patient: f[0].into(),
            model: f[1].into(),
            smoothing: f[2].into(),
            rmse: num(f[3])?,
            drmse: num(f[4])?,
            rates,
            drmse_per_min: num(f[17])?,
            points: f[18].parse().map_err(|_| bad(line_no, format!("invalid count `{}`", f[18])))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use glyco_core::metrics::RegionCounts;

    #[test]
    fn report_rows_round_trip() {
        let report = CgEgaReport {
            rmse: 12.5,
            drmse: 1.0 / 3.0,
            overall: RegionCounts { ap: 8, be: 1, ep: 1 },
            hypo: RegionCounts::default(),
            eu: RegionCounts { ap: 7, be: 1, ep: 0 },
            hyper: RegionCounts { ap: 1, be: 0, ep: 1 },
        };
        let rows = vec![ReportRow::new("synth-001", "lstm", RAW, &report, 1.0 / 15.0)];
        assert_eq!(rows[0].ap(), Some(80.0));
        assert_eq!(rows[0].rates[1], None);
        let text = report_csv(&rows);
        assert!(text.lines().nth(1).unwrap().contains(",80,10,10,,,,87.5,12.5,0,50,0,50,"));
        assert_eq!(parse_report_csv(&text, Path::new("r.csv")).unwrap(), rows);
    }
}
