//! Cohort summary tables and static SVG figures, rebuilt from the files the
//! `evaluate` stage wrote. All output is a pure function of those files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use glyco_core::metrics::{CgEgaLabel, PredictionTrace, HYPER_THRESHOLD, HYPO_THRESHOLD};
use glyco_core::pipeline::mean_std;
use glyco_core::time::{SLOT_MINUTES, SLOTS_PER_DAY};

use crate::csv::{self, format_datetime, read_file, write_file, EgaRow};
use crate::error::Result;
use crate::experiment::{ega_path, parse_report_csv, trace_path, ReportRow, RAW, SMOOTHED};

/// Mean and population standard deviation of each metric for one
/// model and smoothing setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub smoothing: String,
    pub patients: usize,
    pub rmse: (f64, f64),
    pub drmse: (f64, f64),
    pub ap: (f64, f64),
    pub be: (f64, f64),
    pub ep: (f64, f64),
}

/// Groups report rows by model (first-seen order) and smoothing (raw first).
pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut models: Vec<&str> = Vec::new();
    for r in rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut out = Vec::new();
    for smoothing in [RAW, SMOOTHED] {
        for model in &models {
            let group: Vec<&ReportRow> = rows
                .iter()
                .filter(|r| r.model == *model && r.smoothing == smoothing)
                .collect();
            if group.is_empty() {
                continue;
            }
            let stat = |f: &dyn Fn(&ReportRow) -> Option<f64>| {
                let v: Vec<f64> = group.iter().filter_map(|r| f(r)).collect();
                mean_std(&v).unwrap_or((f64::NAN, f64::NAN))
            };
            out.push(SummaryRow {
                model: model.to_string(),
                smoothing: smoothing.to_string(),
                patients: group.len(),
                rmse: stat(&|r| Some(r.rmse)),
                drmse: stat(&|r| Some(r.drmse)),
                ap: stat(&|r| r.rates[0].map(|t| t.0)),
                be: stat(&|r| r.rates[0].map(|t| t.1)),
                ep: stat(&|r| r.rates[0].map(|t| t.2)),
            });
        }
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "model,smoothing,patients,rmse_mean,rmse_std,drmse_mean,drmse_std,ap_mean,ap_std,be_mean,be_std,ep_mean,ep_std";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = write!(out, "{},{},{}", r.model, r.smoothing, r.patients);
        for (m, s) in [r.rmse, r.drmse, r.ap, r.be, r.ep] {
            let _ = write!(out, ",{m},{s}");
        }
        out.push('\n');
    }
    out
}

/// Aligned text table, one block per smoothing setting, cells "mean ± std".
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let cell = |(m, s): (f64, f64)| format!("{m:.2} ± {s:.2}");
    let name_width = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| [cell(r.rmse), cell(r.drmse), cell(r.ap), cell(r.be), cell(r.ep)])
        .collect();
    let headers = ["RMSE", "dRMSE", "AP (%)", "BE (%)", "EP (%)"];
    let mut widths = headers.map(str::len);
    for c in &cells {
        for (w, s) in widths.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let pad = |s: &str, w: usize| format!("{}{s}", " ".repeat(w - s.chars().count()));
    let mut out = format!("{:name_width$}", "model");
    for (h, w) in headers.iter().zip(widths) {
        let _ = write!(out, "  {}", pad(h, w));
    }
    out.push('\n');
    for block in [RAW, SMOOTHED] {
        let members: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].smoothing == block).collect();
        if members.is_empty() {
            continue;
        }
        out.push_str(if block == RAW { "Without smoothing\n" } else { "With smoothing\n" });
        for i in members {
            let _ = write!(out, "{:name_width$}", rows[i].model);
            for (s, w) in cells[i].iter().zip(widths) {
                let _ = write!(out, "  {}", pad(s, w));
            }
            out.push('\n');
        }
    }
    out
}

const AP_COLOR: &str = "#2e7d32";
const BE_COLOR: &str = "#ef6c00";
const EP_COLOR: &str = "#c62828";

fn label_color(label: CgEgaLabel) -> &'static str {
    match label {
        CgEgaLabel::Ap => AP_COLOR,
        CgEgaLabel::Be => BE_COLOR,
        CgEgaLabel::Ep => EP_COLOR,
    }
}

/// Linear map from a data range onto a pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Axis {
    fn map(self, v: f64) -> f64 {
        let v = v.clamp(self.lo, self.hi);
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn svg_open(out: &mut String, width: u32, height: u32, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="16" text-anchor="middle" font-size="13">{}</text>"#, width / 2, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn line(out: &mut String, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
    let _ = writeln!(out, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#);
}

fn frame(out: &mut String, x: Axis, y: Axis, x_ticks: &[f64], y_ticks: &[f64], x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        x.from,
        y.to,
        x.to - x.from,
        y.from - y.to
    );
    for &t in x_ticks {
        let px = x.map(t);
        line(out, px, y.from, px, y.from + 4.0, r##"stroke="#444""##);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, y.from + 16.0);
    }
    for &t in y_ticks {
        let py = y.map(t);
        line(out, x.from - 4.0, py, x.from, py, r##"stroke="#444""##);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t}</text>"#, x.from - 6.0, py + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x.from + x.to) / 2.0,
        y.from + 32.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        x.from - 40.0,
        (y.from + y.to) / 2.0,
        escape(y_label)
    );
}

/// Days covered by a trace, in order.
pub fn trace_days(trace: &PredictionTrace) -> Vec<i64> {
    let mut days: Vec<i64> = trace.points.iter().map(|p| p.timestamp.day()).collect();
    days.dedup();
    days
}

/// True and predicted glucose over one day; gaps between segments are not
/// bridged.
pub fn trace_svg(trace: &PredictionTrace, day: i64, title: &str) -> String {
    let x = Axis {
        lo: 0.0,
        hi: (SLOTS_PER_DAY * SLOT_MINUTES) as f64,
        from: 60.0,
        to: 880.0,
    };
    let y = Axis {
        lo: 40.0,
        hi: 400.0,
        from: 300.0,
        to: 30.0,
    };
    let mut out = String::new();
    svg_open(&mut out, 900, 340, title);
    for threshold in [HYPO_THRESHOLD, HYPER_THRESHOLD] {
        let py = y.map(threshold);
        line(&mut out, x.from, py, x.to, py, r##"stroke="#bbb" stroke-dasharray="4 3""##);
    }
    let hours: Vec<f64> = (0..=24).step_by(3).map(|h| f64::from(h) * 60.0).collect();
    frame(&mut out, x, y, &hours, &[40.0, 70.0, 180.0, 400.0], "minutes since midnight", "glucose (mg/dL)");

    let points: Vec<_> = trace.points.iter().filter(|p| p.timestamp.day() == day).collect();
    for (series, color, width) in [(0, "#222", "1.5"), (1, "#1565c0", "1.2")] {
        let mut start = 0;
        while start < points.len() {
            let seg = points[start].segment_id;
            let end = start + points[start..].iter().take_while(|p| p.segment_id == seg).count();
            let mut path = String::new();
            for p in &points[start..end] {
                let minute = (p.timestamp.slot() - day * SLOTS_PER_DAY) as f64 * SLOT_MINUTES as f64;
                let v = if series == 0 { p.y_true } else { p.y_pred };
                let _ = write!(path, "{:.2},{:.2} ", x.map(minute), y.map(v));
            }
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
                path.trim_end()
            );
            start = end;
        }
    }
    let _ = writeln!(out, r##"<text x="{:.2}" y="44" fill="#222">true</text>"##, x.to - 90.0);
    let _ = writeln!(out, r##"<text x="{:.2}" y="58" fill="#1565c0">predicted</text>"##, x.to - 90.0);
    out.push_str("</svg>\n");
    out
}

fn legend(out: &mut String, rows: &[EgaRow], x: f64, y: f64) {
    for (i, label) in CgEgaLabel::ALL.iter().enumerate() {
        let n = rows.iter().filter(|r| r.label == *label).count();
        let py = y + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="8" height="8" fill="{}"/>"#,
            py - 8.0,
            label_color(*label)
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{py:.2}">{} ({n})</text>"#, x + 12.0, label.as_str());
    }
}

fn scatter(out: &mut String, rows: &[EgaRow], x: Axis, y: Axis, pick: impl Fn(&EgaRow) -> (f64, f64)) {
    for r in rows {
        let (vx, vy) = pick(r);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.6"/>"#,
            x.map(vx),
            y.map(vy),
            label_color(r.label)
        );
    }
}

/// Predicted against true glucose, one dot per scatter row.
pub fn p_ega_svg(rows: &[EgaRow], title: &str) -> String {
    let x = Axis {
        lo: 0.0,
        hi: 400.0,
        from: 60.0,
        to: 460.0,
    };
    let y = Axis {
        lo: 0.0,
        hi: 400.0,
        from: 440.0,
        to: 40.0,
    };
    let mut out = String::new();
    svg_open(&mut out, 500, 490, title);
    line(&mut out, x.map(0.0), y.map(0.0), x.map(400.0), y.map(400.0), r##"stroke="#bbb""##);
    for t in [HYPO_THRESHOLD, HYPER_THRESHOLD] {
        line(&mut out, x.map(t), y.from, x.map(t), y.to, r##"stroke="#ddd" stroke-dasharray="4 3""##);
    }
    let ticks = [0.0, 70.0, 180.0, 400.0];
    frame(&mut out, x, y, &ticks, &ticks, "true glucose (mg/dL)", "predicted glucose (mg/dL)");
    scatter(&mut out, rows, x, y, |r| (r.y_true, r.y_pred));
    legend(&mut out, rows, x.from + 10.0, y.to + 16.0);
    out.push_str("</svg>\n");
    out
}

/// Predicted against true rate of change; rates outside +-4 mg/dL/min are
/// drawn on the border.
pub fn r_ega_svg(rows: &[EgaRow], title: &str) -> String {
    let x = Axis {
        lo: -4.0,
        hi: 4.0,
        from: 60.0,
        to: 460.0,
    };
    let y = Axis {
        lo: -4.0,
        hi: 4.0,
        from: 440.0,
        to: 40.0,
    };
    let mut out = String::new();
    svg_open(&mut out, 500, 490, title);
    line(&mut out, x.map(-4.0), y.map(-4.0), x.map(4.0), y.map(4.0), r##"stroke="#bbb""##);
    line(&mut out, x.map(0.0), y.from, x.map(0.0), y.to, r##"stroke="#ddd""##);
    line(&mut out, x.from, y.map(0.0), x.to, y.map(0.0), r##"stroke="#ddd""##);
    let ticks = [-4.0, -2.0, 0.0, 2.0, 4.0];
    frame(&mut out, x, y, &ticks, &ticks, "true rate (mg/dL/min)", "predicted rate (mg/dL/min)");
    scatter(&mut out, rows, x, y, |r| (r.true_rate, r.pred_rate));
    legend(&mut out, rows, x.from + 10.0, y.to + 16.0);
    out.push_str("</svg>\n");
    out
}

/// Stage `report`: summary.csv, summary.txt and `plots/` from report.csv,
/// the traces and the EGA scatter files.
pub fn run_report(out: &Path) -> Result<Vec<SummaryRow>> {
    let report_path = out.join("report.csv");
    let rows = parse_report_csv(&read_file(&report_path)?, &report_path)?;
    let summary = summarize(&rows);
    write_file(&out.join("summary.csv"), &summary_csv(&summary))?;
    write_file(&out.join("summary.txt"), &summary_table(&summary))?;

    let mut seen = BTreeMap::new();
    for r in &rows {
        if seen.insert((r.patient.clone(), r.model.clone(), r.smoothing.clone()), ()).is_some() {
            continue;
        }
        let plots = out.join("plots").join(&r.patient);
        let stem = format!("{}_{}", r.model, r.smoothing);
        let title = format!("{} {} ({})", r.patient, r.model, r.smoothing);

        let tp = trace_path(out, &r.patient, &r.model, &r.smoothing);
        let trace = csv::parse_trace_csv(&read_file(&tp)?, &tp)?;
        for day in trace_days(&trace) {
            let Some(first) = trace.points.iter().find(|p| p.timestamp.day() == day) else { continue };
            let date = &format_datetime(first.timestamp)[..10];
            write_file(
                &plots.join(format!("{stem}_trace_{date}.svg")),
                &trace_svg(&trace, day, &format!("{title}, {date}")),
            )?;
        }

        let ep = ega_path(out, &r.patient, &r.model, &r.smoothing);
        let ega = csv::parse_ega_csv(&read_file(&ep)?, &ep)?;
        write_file(&plots.join(format!("{stem}_pega.svg")), &p_ega_svg(&ega, &format!("P-EGA, {title}")))?;
        write_file(&plots.join(format!("{stem}_rega.svg")), &r_ega_svg(&ega, &format!("R-EGA, {title}")))?;
    }
    Ok(summary)
}
