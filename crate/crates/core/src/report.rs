//! CSV, JSON and SVG output for replication suites.
//!
//! CSV columns, in order:
//! `run_index, seed, t0_true, pLv_true, t1, t2, c2_5, c97_5, e_true, e1, e2,
//! e_c2_5, e_c97_5, n_hosp`. Absent values (real data has no truth) are
//! written as empty fields. The JSON document is
//! `{"label", "n", "records": [..], "summary": {..}}` with the same record
//! field names.
//!
//! The SVG plot has one column group per run, left to right in record
//! order. Each group holds a green truth line (`class="truth"`), a red `t1`
//! mark (`class="t1"`), a cyan `t2` mark (`class="t2"`), grey posterior
//! dots (`class="sample"`) and two dark-blue centile marks
//! (`class="centile"`).

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harness::{RunRecord, SuiteReport, SuiteSummary};
use crate::sampler::csv_err;

pub const CSV_COLUMNS: [&str; 14] = [
    "run_index",
    "seed",
    "t0_true",
    "pLv_true",
    "t1",
    "t2",
    "c2_5",
    "c97_5",
    "e_true",
    "e1",
    "e2",
    "e_c2_5",
    "e_c97_5",
    "n_hosp",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Svg => "svg",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(invalid(format!("unknown report format {other:?}"))),
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(records: &[RunRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.run_index.to_string(),
            r.seed.to_string(),
            opt(r.t0_true),
            opt(r.p_l_given_v_true),
            r.t1.to_string(),
            r.t2.to_string(),
            r.c2_5.to_string(),
            r.c97_5.to_string(),
            opt(r.e_true),
            r.e1.to_string(),
            r.e2.to_string(),
            r.e_c2_5.to_string(),
            r.e_c97_5.to_string(),
            r.n_hosp.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_csv`].
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Parse(format!("unexpected CSV header {headers:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let f = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|e| Error::Parse(format!("column {}: {e}", CSV_COLUMNS[i])))
        };
        let o = |i: usize| -> Result<Option<f64>> {
            if row[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let u = |i: usize| -> Result<u64> {
            row[i]
                .parse()
                .map_err(|e| Error::Parse(format!("column {}: {e}", CSV_COLUMNS[i])))
        };
        out.push(RunRecord {
            run_index: u(0)? as usize,
            seed: u(1)?,
            t0_true: o(2)?,
            p_l_given_v_true: o(3)?,
            t1: f(4)?,
            t2: f(5)?,
            c2_5: f(6)?,
            c97_5: f(7)?,
            e_true: o(8)?,
            e1: f(9)?,
            e2: f(10)?,
            e_c2_5: f(11)?,
            e_c97_5: f(12)?,
            n_hosp: u(13)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub label: String,
    pub n: u64,
    pub records: Vec<RunRecord>,
    pub summary: SuiteSummary,
}

impl From<&SuiteReport> for JsonReport {
    fn from(r: &SuiteReport) -> Self {
        JsonReport {
            label: r.label.clone(),
            n: r.n,
            records: r.records.clone(),
            summary: r.summary,
        }
    }
}

pub fn write_json<W: Write>(report: &SuiteReport, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, &JsonReport::from(report))
        .map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(writer)?;
    Ok(())
}

pub fn read_json<R: std::io::Read>(reader: R) -> Result<JsonReport> {
    serde_json::from_reader(reader).map_err(|e| Error::Parse(e.to_string()))
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 45.0;

/// Renders the suite as a standalone SVG document.
pub fn render_svg(report: &SuiteReport) -> Result<String> {
    let records = &report.records;
    if records.is_empty() {
        return Err(invalid("cannot plot an empty suite"));
    }
    let mut values: Vec<f64> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        values.extend([r.t1, r.t2, r.c2_5, r.c97_5]);
        values.extend(r.t0_true);
        if let Some(s) = report.posterior_t0.get(i) {
            values.extend(s.iter().copied());
        }
    }
    values.retain(|v| v.is_finite());
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, lo + 1.0)
    };
    let y = |t: f64| MARGIN + (hi - t.clamp(lo, hi)) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let col = (WIDTH - 2.0 * MARGIN) / records.len() as f64;
    let half = (col * 0.35).min(12.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="13">{} (N = {}): n_t1_better = {}/{}, width = {:.2}</text>"#,
        escape(&report.label),
        report.n,
        report.summary.n_t1_better,
        report.summary.n_runs,
        report.summary.mean_ci_width
    );
    // axis with integer ticks
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN}" y1="{:.2}" x2="{MARGIN}" y2="{:.2}" stroke="black"/>"#,
        y(hi),
        y(lo)
    );
    let step = ((hi - lo) / 8.0).ceil().max(1.0);
    let mut tick = lo;
    while tick <= hi {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{tick}</text>"#,
            MARGIN - 4.0,
            y(tick) + 3.0
        );
        tick += step;
    }
    if lo < 0.0 && hi > 0.0 {
        let _ = writeln!(
            s,
            r#"<line class="zero" x1="{MARGIN}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="lightgrey"/>"#,
            y(0.0),
            WIDTH - MARGIN
        );
    }

    for (i, r) in records.iter().enumerate() {
        let x = MARGIN + (i as f64 + 0.5) * col;
        let _ = writeln!(s, r#"<g class="run" data-run="{}">"#, r.run_index);
        if let Some(draws) = report.posterior_t0.get(i) {
            for &t in draws.iter().filter(|t| t.is_finite()) {
                let _ = writeln!(
                    s,
                    r##"<circle class="sample" cx="{x:.2}" cy="{:.2}" r="1" fill="#999999"/>"##,
                    y(t)
                );
            }
        }
        if let Some(t0) = r.t0_true {
            let _ = writeln!(
                s,
                r##"<line class="truth" x1="{:.2}" y1="{2:.2}" x2="{1:.2}" y2="{2:.2}" stroke="#00a000" stroke-width="2"/>"##,
                x - half,
                x + half,
                y(t0)
            );
        }
        let _ = writeln!(
            s,
            r##"<circle class="t1" cx="{x:.2}" cy="{:.2}" r="3.5" fill="#e00000"/>"##,
            y(r.t1)
        );
        let _ = writeln!(
            s,
            r##"<circle class="t2" cx="{x:.2}" cy="{:.2}" r="3.5" fill="#00c0c0"/>"##,
            y(r.t2)
        );
        for c in [r.c2_5, r.c97_5] {
            let _ = writeln!(
                s,
                r##"<line class="centile" x1="{:.2}" y1="{2:.2}" x2="{1:.2}" y2="{2:.2}" stroke="#000080" stroke-width="2"/>"##,
                x - half / 2.0,
                x + half / 2.0,
                y(c)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes the report in `format` to `path`.
pub fn emit_report(report: &SuiteReport, format: ReportFormat, path: &Path) -> Result<()> {
    if report.records.is_empty() {
        return Err(invalid("cannot emit an empty suite"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Csv => write_csv(&report.records, &mut w)?,
        ReportFormat::Json => write_json(report, &mut w)?,
        ReportFormat::Svg => w.write_all(render_svg(report)?.as_bytes())?,
    }
    w.flush()?;
    Ok(())
}
