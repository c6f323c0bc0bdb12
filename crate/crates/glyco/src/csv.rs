//! Plain comma-separated files: raw patient events, the preprocessed export,
//! prediction traces and EGA scatter points. None of the fields need quoting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime};
use glyco_core::data::{DiabetesType, EventKind, PatientRecord, RawEvent};
use glyco_core::metrics::{CgEgaLabel, EgaPoint, EgaZone, PredictionTrace, TracePoint};
use glyco_core::pipeline::PreparedPatient;
use glyco_core::time::Timestamp;

use crate::error::{Error, Result};

pub const RAW_HEADER: &str = "datetime,type,value";
pub const PREPROCESSED_HEADER: &str = "datetime,glucose,cho,insulin,interpolated,day_index,split";
pub const TRACE_HEADER: &str = "datetime,y_true,y_pred,segment_id";
pub const EGA_HEADER: &str = "y_true,y_pred,true_rate,pred_rate,p_zone,r_zone,label";

const DATETIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn format_datetime(t: Timestamp) -> String {
    match DateTime::from_timestamp(t.secs(), 0) {
        Some(dt) => dt.naive_utc().format(DATETIME_FORMAT).to_string(),
        None => t.secs().to_string(),
    }
}

/// ISO-8601 local date-time with seconds. A space may replace the `T`;
/// fractional seconds are truncated.
pub fn parse_datetime(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| Timestamp::from_secs(dt.and_utc().timestamp()))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Data lines after a checked header, with 1-based line numbers.
fn data_lines<'a>(text: &'a str, header: &str, path: &Path) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let first = lines.next().map(|(_, l)| l.trim_start_matches('\u{feff}').trim());
    if first != Some(header) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{header}`, found `{}`", first.unwrap_or("")),
        });
    }
    Ok(lines.filter(|(_, l)| !l.trim().is_empty()))
}

fn fields<'a>(line: &'a str, n: usize, path: &Path, line_no: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != n {
        return Err(parse_error(path, line_no, format!("expected {n} fields, found {}", f.len())));
    }
    Ok(f)
}

fn parse_error(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

fn number(s: &str, what: &str, path: &Path, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| parse_error(path, line, format!("invalid {what} `{s}`")))
}

pub fn parse_patient_csv(text: &str, path: &Path, patient_id: &str, diabetes_type: DiabetesType) -> Result<PatientRecord> {
    let mut events = Vec::new();
    for (line, l) in data_lines(text, RAW_HEADER, path)? {
        let f = fields(l, 3, path, line)?;
        let timestamp =
            parse_datetime(f[0]).ok_or_else(|| parse_error(path, line, format!("invalid datetime `{}`", f[0])))?;
        let kind = EventKind::parse(f[1]).ok_or_else(|| parse_error(path, line, format!("unknown event type `{}`", f[1])))?;
        let value = number(f[2], "value", path, line)?;
        events.push(RawEvent::new(timestamp, kind, value));
    }
    Ok(PatientRecord::new(patient_id, diabetes_type, events))
}

pub fn read_patient_csv(path: &Path, diabetes_type: DiabetesType) -> Result<PatientRecord> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            message: "file name is not a valid patient id".into(),
        })?;
    parse_patient_csv(&read_file(path)?, path, id, diabetes_type)
}

/// Every `*.csv` file of `dir`, ordered by file name.
pub fn patient_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn patient_csv(record: &PatientRecord) -> String {
    let mut out = String::with_capacity(32 * record.events.len() + 32);
    out.push_str(RAW_HEADER);
    out.push('\n');
    for e in &record.events {
        let _ = writeln!(out, "{},{},{}", format_datetime(e.timestamp), e.kind.as_str(), e.value);
    }
    out
}

/// `day_index` counts retained days from 0; glucose is empty where no value
/// could be filled.
pub fn preprocessed_csv(patient: &PreparedPatient) -> String {
    let s = &patient.series;
    let days = s.days();
    let mut out = String::with_capacity(64 * s.len() + 64);
    out.push_str(PREPROCESSED_HEADER);
    out.push('\n');
    for i in 0..s.len() {
        let day = s.day_index(i);
        let ordinal = days.binary_search(&day).unwrap_or_default();
        let glucose = s.glucose[i].map(|g| g.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_datetime(s.timestamp(i)),
            glucose,
            s.cho[i],
            s.insulin[i],
            u8::from(s.interpolated[i]),
            ordinal,
            patient.split.label(day).unwrap_or("")
        );
    }
    out
}

pub fn trace_csv(trace: &PredictionTrace) -> String {
    let mut out = String::with_capacity(64 * trace.len() + 64);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for p in &trace.points {
        let _ = writeln!(out, "{},{},{},{}", format_datetime(p.timestamp), p.y_true, p.y_pred, p.segment_id);
    }
    out
}

pub fn parse_trace_csv(text: &str, path: &Path) -> Result<PredictionTrace> {
    let mut points = Vec::new();
    for (line, l) in data_lines(text, TRACE_HEADER, path)? {
        let f = fields(l, 4, path, line)?;
        points.push(TracePoint {
            timestamp: parse_datetime(f[0])
                .ok_or_else(|| parse_error(path, line, format!("invalid datetime `{}`", f[0])))?,
            y_true: number(f[1], "y_true", path, line)?,
            y_pred: number(f[2], "y_pred", path, line)?,
            segment_id: f[3]
                .parse()
                .map_err(|_| parse_error(path, line, format!("invalid segment id `{}`", f[3])))?,
        });
    }
    Ok(PredictionTrace::new(points))
}

/// One row of the EGA scatter export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgaRow {
    pub y_true: f64,
    pub y_pred: f64,
    pub true_rate: f64,
    pub pred_rate: f64,
    pub p_zone: EgaZone,
    pub r_zone: EgaZone,
    pub label: CgEgaLabel,
}

impl From<&EgaPoint> for EgaRow {
    fn from(p: &EgaPoint) -> Self {
        EgaRow {
            y_true: p.y_true,
            y_pred: p.y_pred,
            true_rate: p.true_rate,
            pred_rate: p.pred_rate,
            p_zone: p.p_zone,
            r_zone: p.r_zone,
            label: p.label,
        }
    }
}

pub fn ega_csv(points: &[EgaPoint]) -> String {
    let mut out = String::with_capacity(64 * points.len() + 64);
    out.push_str(EGA_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.y_true,
            p.y_pred,
            p.true_rate,
            p.pred_rate,
            p.p_zone.as_str(),
            p.r_zone.as_str(),
            p.label.as_str()
        );
    }
    out
}

pub fn parse_ega_csv(text: &str, path: &Path) -> Result<Vec<EgaRow>> {
    let mut rows = Vec::new();
    for (line, l) in data_lines(text, EGA_HEADER, path)? {
        let f = fields(l, 7, path, line)?;
        let zone = |s: &str| EgaZone::parse(s).ok_or_else(|| parse_error(path, line, format!("unknown zone `{s}`")));
        rows.push(EgaRow {
            y_true: number(f[0], "y_true", path, line)?,
            y_pred: number(f[1], "y_pred", path, line)?,
            true_rate: number(f[2], "true_rate", path, line)?,
            pred_rate: number(f[3], "pred_rate", path, line)?,
            p_zone: zone(f[4])?,
            r_zone: zone(f[5])?,
            label: CgEgaLabel::parse(f[6]).ok_or_else(|| parse_error(path, line, format!("unknown label `{}`", f[6])))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datetime_round_trip() {
        let t = parse_datetime("2020-01-01T00:05:00").unwrap();
        assert_eq!(t.secs(), 1_577_836_800 + 300);
        assert_eq!(format_datetime(t), "2020-01-01T00:05:00");
        assert_eq!(parse_datetime("2020-01-01 00:05:00.9"), Some(t));
        assert_eq!(parse_datetime("2020-01-01"), None);
    }

    #[test]
    fn raw_csv_round_trip() {
        let text = "datetime,type,value\n2020-01-01T00:05:00,glucose,120.5\n2020-01-01T00:00:00,cho,40\n\n";
        let r = parse_patient_csv(text, Path::new("p.csv"), "p", DiabetesType::Type1).unwrap();
        assert_eq!(r.events.len(), 2);
        assert_eq!(r.events[0].kind, EventKind::Cho);
        let again = parse_patient_csv(&patient_csv(&r), Path::new("p.csv"), "p", DiabetesType::Type1).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "datetime,type,value\n2020-01-01T00:05:00,glucose,120\n2020-01-01T00:10:00,bolus,3\n";
        let err = parse_patient_csv(text, Path::new("p.csv"), "p", DiabetesType::Type1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_patient_csv("a,b,c\n", Path::new("p.csv"), "p", DiabetesType::Type1).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_patient_csv("datetime,type,value\nx,glucose\n", Path::new("p.csv"), "p", DiabetesType::Type1)
            .unwrap_err();
        assert!(err.to_string().contains("p.csv:2"), "{err}");
    }

    #[test]
    fn trace_round_trip() {
        let trace = PredictionTrace::new(vec![
            TracePoint {
                timestamp: Timestamp::from_secs(1_577_836_800),
                y_true: 101.25,
                y_pred: 99.0 + 1.0 / 3.0,
                segment_id: 4,
            },
            TracePoint {
                timestamp: Timestamp::from_secs(1_577_837_100),
                y_true: 0.1 + 0.2,
                y_pred: 1e-7,
                segment_id: 4,
            },
        ]);
        let text = trace_csv(&trace);
        assert_eq!(parse_trace_csv(&text, Path::new("t.csv")).unwrap(), trace);
    }
}
