//! Sample CSV, band JSON, report CSV and SVG band plots.
//!
//! Sample CSV: a header of grid times, then one curve per line, comma
//! separated, LF endings, no quoting. Floats are written in Rust's shortest
//! round-trip form, so reading a file back reproduces every value exactly.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::curves::{validate_matrix, Band, SampleMatrix, TimeGrid};
use crate::error::{Result, SpiError};
use crate::eval::{CoverageReport, ExperimentReport};

fn parse_error(line: usize, message: impl Into<String>) -> SpiError {
    SpiError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses sample CSV text; see the module docs for the layout.
pub fn parse_sample_csv<R: Read>(reader: R, survival: bool) -> Result<SampleMatrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut grid = None;
    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let values = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| parse_error(line, format!("'{field}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if grid.is_none() {
            grid = Some(TimeGrid::new(values)?);
        } else {
            rows.push(values);
        }
    }
    let grid = grid.ok_or_else(|| parse_error(1, "missing header row of grid times"))?;
    validate_matrix(rows, grid, survival)
}

pub fn read_sample_csv(path: impl AsRef<Path>, survival: bool) -> Result<SampleMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SpiError::io(path, e))?;
    parse_sample_csv(file, survival)
}

fn join(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
    }
    out
}

pub fn sample_csv_string(samples: &SampleMatrix) -> String {
    let mut out = join(samples.grid().times());
    out.push('\n');
    for row in samples.rows() {
        out.push_str(&join(row));
        out.push('\n');
    }
    out
}

pub fn write_sample_csv(samples: &SampleMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, sample_csv_string(samples)).map_err(|e| SpiError::io(path, e))
}

/// Everything stored next to the bounds in a band file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMetadata {
    pub method: String,
    pub alpha: f64,
    pub seed: u64,
    /// Free-form echo of the settings that produced the band.
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<CoverageReport>,
}

#[derive(Serialize, Deserialize)]
struct BandDocument {
    grid: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(flatten)]
    meta: BandMetadata,
}

pub fn band_json_string(band: &Band, meta: &BandMetadata) -> Result<String> {
    let doc = BandDocument {
        grid: band.grid().times().to_vec(),
        lower: band.lower().to_vec(),
        upper: band.upper().to_vec(),
        meta: meta.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn write_band_json(band: &Band, meta: &BandMetadata, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, band_json_string(band, meta)?).map_err(|e| SpiError::io(path, e))
}

pub fn parse_band_json(text: &str) -> Result<(Band, BandMetadata)> {
    let doc: BandDocument = serde_json::from_str(text)?;
    let band = Band::new(TimeGrid::new(doc.grid)?, doc.lower, doc.upper)?;
    Ok((band, doc.meta))
}

pub fn read_band_json(path: impl AsRef<Path>) -> Result<(Band, BandMetadata)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SpiError::io(path, e))?;
    parse_band_json(&text)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| SpiError::io(path, e))
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "trial",
    "method",
    "alpha",
    "grid_size",
    "observed_coverage",
    "average_width",
    "percent_change",
];

/// Per-trial rows; an absent percent change is an empty field.
pub fn report_csv_string(report: &ExperimentReport) -> String {
    let mut out = REPORT_COLUMNS.join(",");
    out.push('\n');
    for r in &report.records {
        let pc = r.percent_change.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.trial, r.method, r.alpha, r.grid_size, r.observed_coverage, r.average_width, pc
        )
        .unwrap();
    }
    out
}

pub fn write_report_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| SpiError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(report_csv_string(report).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| SpiError::io(path, e))
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 52.0;

/// Standalone SVG: the band as a shaded polygon between linearly
/// interpolated bounds, an optional point-estimate curve, and axes with
/// survival probability on `[0, 1]`.
pub fn band_svg(band: &Band, curve: Option<&[f64]>) -> Result<String> {
    if let Some(c) = curve {
        if c.len() != band.len() {
            return Err(SpiError::DimensionMismatch {
                expected: band.len(),
                found: c.len(),
            });
        }
    }
    let times = band.grid().times();
    let (t0, t1) = if times.len() == 1 {
        (times[0] - 0.5, times[0] + 0.5)
    } else {
        (times[0], times[times.len() - 1])
    };
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |t: f64| MARGIN_LEFT + (t - t0) / (t1 - t0) * plot_w;
    let y = |p: f64| MARGIN_TOP + (1.0 - p.clamp(0.0, 1.0)) * plot_h;
    let bottom = MARGIN_TOP + plot_h;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#).unwrap();

    // band: upper left to right, lower right to left
    let mut points = Vec::with_capacity(2 * times.len() + 2);
    if times.len() == 1 {
        for tx in [t0, t1] {
            points.push((x(tx), y(band.upper()[0])));
        }
        for tx in [t1, t0] {
            points.push((x(tx), y(band.lower()[0])));
        }
    } else {
        for (t, &u) in times.iter().zip(band.upper()) {
            points.push((x(*t), y(u)));
        }
        for (t, &l) in times.iter().zip(band.lower()).rev() {
            points.push((x(*t), y(l)));
        }
    }
    let path: Vec<String> = points.iter().map(|(px, py)| format!("{px:.3},{py:.3}")).collect();
    writeln!(
        s,
        r##"<polygon class="band" points="{}" fill="#7fbf7f" fill-opacity="0.6" stroke="#3f7f3f" stroke-width="1"/>"##,
        path.join(" ")
    )
    .unwrap();

    if let Some(c) = curve {
        let pts: Vec<String> = times
            .iter()
            .zip(c)
            .map(|(&t, &p)| format!("{:.3},{:.3}", x(t), y(p)))
            .collect();
        writeln!(
            s,
            r##"<polyline class="estimate" points="{}" fill="none" stroke="#c03030" stroke-width="2"/>"##,
            pts.join(" ")
        )
        .unwrap();
    }

    writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{bottom}" x2="{:.3}" y2="{bottom}" stroke="black"/>"#,
        MARGIN_LEFT + plot_w
    )
    .unwrap();
    writeln!(s, r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{bottom}" stroke="black"/>"#).unwrap();
    for i in 0..=4 {
        let p = i as f64 / 4.0;
        let py = y(p);
        writeln!(
            s,
            r#"<line x1="{:.3}" y1="{py:.3}" x2="{MARGIN_LEFT}" y2="{py:.3}" stroke="black"/><text x="{:.3}" y="{:.3}" text-anchor="end">{p:.2}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0
        )
        .unwrap();
    }
    for i in 0..=4 {
        let t = t0 + (t1 - t0) * i as f64 / 4.0;
        let px = x(t);
        writeln!(
            s,
            r#"<line x1="{px:.3}" y1="{bottom}" x2="{px:.3}" y2="{:.3}" stroke="black"/><text x="{px:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            tick_label(t)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">time</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.3}" text-anchor="middle" transform="rotate(-90 16 {:.3})">survival probability</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn render_band_svg(band: &Band, curve: Option<&[f64]>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, band_svg(band, curve)?).map_err(|e| SpiError::io(path, e))
}
