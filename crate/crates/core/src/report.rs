//! CSV / JSON serialization and heatmap rendering.
//!
//! Data files are deterministic: fixed column order, fixed float formatting
//! (12 significant digits in CSV, shortest round-trip in JSON) and no
//! timestamps. Run metadata goes to a `*.meta.json` sidecar instead.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::amplitudes::{AmplitudeMatrix, BoostModel, ModeRange};
use crate::engine::{PointRecord, SweepResult};
use crate::entanglement::{EntanglementMetrics, JointProbability};
use crate::kinematics::{LorentzFactor, PhaseBranch};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Pixmap,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "png" | "pixmap" | "pixmap-image" => Ok(OutputFormat::Pixmap),
            other => Err(format!("unknown format {other:?} (csv, json, png)")),
        }
    }
}

/// 12 significant digits, scientific.
pub fn fmt_csv(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    format!("{x:.11e}")
}

/// Compact Lorentz factor label for file names.
pub fn gamma_tag(gamma: LorentzFactor) -> String {
    let g = gamma.value();
    if g.fract() == 0.0 && g < 1e15 {
        format!("{}", g as u64)
    } else {
        format!("{g:.6}").trim_end_matches('0').to_string()
    }
}

/// `P(k, m)` grid: a `k\m` header row of m indices, then one row per k.
pub fn joint_csv(joint: &JointProbability, lmax: ModeRange) -> String {
    let mut out = String::from("k\\m");
    for m in lmax.indices() {
        write!(out, ",{m}").unwrap();
    }
    out.push('\n');
    for (r, k) in lmax.indices().enumerate() {
        write!(out, "{k}").unwrap();
        for c in 0..joint.dim {
            out.push(',');
            out.push_str(&fmt_csv(joint.at(r, c)));
        }
        out.push('\n');
    }
    out
}

/// Long-format complex amplitudes: `k,m,re,im`.
pub fn amplitude_csv(matrix: &AmplitudeMatrix) -> String {
    let mut out = String::from("k,m,re,im\n");
    for k in matrix.lmax.indices() {
        for m in matrix.lmax.indices() {
            let z = matrix.get(k, m);
            writeln!(out, "{k},{m},{},{}", fmt_csv(z.re), fmt_csv(z.im)).unwrap();
        }
    }
    out
}

fn matrix_header(matrix: &AmplitudeMatrix) -> serde_json::Map<String, Value> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(SCHEMA_VERSION));
    doc.insert("model".into(), json!(matrix.model));
    doc.insert("gamma".into(), json!(matrix.gamma.value()));
    doc.insert("lmax".into(), json!(matrix.lmax.l_max));
    doc.insert("branch".into(), json!(matrix.branch));
    doc.insert(
        "indices".into(),
        json!(matrix.lmax.indices().collect::<Vec<_>>()),
    );
    doc
}

pub fn joint_json(matrix: &AmplitudeMatrix, joint: &JointProbability) -> Result<String, ReportError> {
    let mut doc = matrix_header(matrix);
    doc.insert("kind".into(), json!("joint-probability"));
    let rows: Vec<&[f64]> = joint.entries.chunks(joint.dim).collect();
    doc.insert("p".into(), json!(rows));
    Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
}

pub fn amplitude_json(matrix: &AmplitudeMatrix) -> Result<String, ReportError> {
    let mut doc = matrix_header(matrix);
    doc.insert("kind".into(), json!("amplitudes"));
    let d = matrix.dim();
    let re: Vec<Vec<f64>> = matrix.entries().chunks(d).map(|r| r.iter().map(|z| z.re).collect()).collect();
    let im: Vec<Vec<f64>> = matrix.entries().chunks(d).map(|r| r.iter().map(|z| z.im).collect()).collect();
    doc.insert("re".into(), json!(re));
    doc.insert("im".into(), json!(im));
    Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
}

fn metric_fields(m: Option<&EntanglementMetrics>) -> [f64; 5] {
    match m {
        Some(m) => [m.entropy_bits, m.purity, m.negativity, m.d_eff, m.mutual_info_bits],
        None => [f64::NAN; 5],
    }
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "model",
    "gamma",
    "entropy_bits",
    "purity",
    "negativity",
    "d_eff",
    "mi_bits",
];

/// One row per point; failed points carry `NaN` metrics.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for rec in &result.records {
        write!(out, "{},{}", rec.model, fmt_csv(rec.gamma.value())).unwrap();
        for v in metric_fields(rec.data.as_ref().map(|d| &d.metrics)) {
            out.push(',');
            out.push_str(&fmt_csv(v));
        }
        out.push('\n');
    }
    out
}

/// Long format `model,gamma,l,p_k,p_m`.
pub fn marginals_csv(result: &SweepResult) -> String {
    let lmax = result.provenance.lmax;
    let mut out = String::from("model,gamma,l,p_k,p_m\n");
    for rec in ok_records(result) {
        let mg = &rec.data.as_ref().unwrap().marginals;
        for (i, l) in lmax.indices().enumerate() {
            writeln!(
                out,
                "{},{},{l},{},{}",
                rec.model,
                fmt_csv(rec.gamma.value()),
                fmt_csv(mg.p_k[i]),
                fmt_csv(mg.p_m[i])
            )
            .unwrap();
        }
    }
    out
}

/// Long format `model,gamma,rank,p,cumulative`; probabilities at or below
/// the report floor are omitted.
pub fn schmidt_csv(result: &SweepResult) -> String {
    let mut out = String::from("model,gamma,rank,p,cumulative\n");
    for rec in ok_records(result) {
        let spec = &rec.data.as_ref().unwrap().schmidt;
        for (i, (p, cum)) in spec.reported().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                rec.model,
                fmt_csv(rec.gamma.value()),
                i + 1,
                fmt_csv(p),
                fmt_csv(cum)
            )
            .unwrap();
        }
    }
    out
}

fn ok_records(result: &SweepResult) -> impl Iterator<Item = &PointRecord> {
    result.records.iter().filter(|r| r.data.is_some())
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    schema: u32,
    kind: &'a str,
    result: &'a SweepResult,
}

pub fn sweep_json(result: &SweepResult, kind: &str) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(&SweepDoc {
        schema: SCHEMA_VERSION,
        kind,
        result,
    })? + "\n")
}

pub const METRIC_LABELS: [&str; 5] = ["S(bits)", "P", "MI(bits)", "N", "D_eff"];

fn metric_row(m: &EntanglementMetrics) -> [f64; 5] {
    [m.entropy_bits, m.purity, m.mutual_info_bits, m.negativity, m.d_eff]
}

/// Blocks of five metric rows per γ, one column per model.
pub fn table_csv(result: &SweepResult, models: &[BoostModel]) -> String {
    let lmax = result.provenance.lmax.l_max;
    let mut out = String::from("gamma,lmax,metric");
    for m in models {
        write!(out, ",{m}").unwrap();
    }
    out.push('\n');
    for gamma in table_gammas(result) {
        for (row, label) in METRIC_LABELS.iter().enumerate() {
            write!(out, "{},{lmax},{label}", gamma_tag(gamma)).unwrap();
            for &model in models {
                out.push(',');
                out.push_str(&table_cell(result, model, gamma, row));
            }
            out.push('\n');
        }
    }
    out
}

/// Aligned plain-text rendering of [`table_csv`].
pub fn table_text(result: &SweepResult, models: &[BoostModel]) -> String {
    let lmax = result.provenance.lmax.l_max;
    let mut out = String::new();
    write!(out, "{:<26}{:<10}", "Physical variables", "Metrics").unwrap();
    for m in models {
        write!(out, "{:>14}", m.label()).unwrap();
    }
    out.push('\n');
    let width = 36 + 14 * models.len();
    for gamma in table_gammas(result) {
        out.push_str(&"-".repeat(width));
        out.push('\n');
        for (row, label) in METRIC_LABELS.iter().enumerate() {
            let head = if row == 2 {
                format!("gamma={}, lmax={lmax}", gamma_tag(gamma))
            } else {
                String::new()
            };
            write!(out, "{head:<26}{label:<10}").unwrap();
            for &model in models {
                write!(out, "{:>14}", table_cell(result, model, gamma, row)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

fn table_gammas(result: &SweepResult) -> Vec<LorentzFactor> {
    let mut seen: Vec<LorentzFactor> = Vec::new();
    for r in &result.records {
        if !seen.contains(&r.gamma) {
            seen.push(r.gamma);
        }
    }
    seen
}

fn table_cell(result: &SweepResult, model: BoostModel, gamma: LorentzFactor, row: usize) -> String {
    match result
        .get(model, gamma.value())
        .and_then(|r| r.data.as_ref())
    {
        Some(d) => format!("{:.4}", metric_row(&d.metrics)[row]),
        None => "failed".to_string(),
    }
}

/// Dark indigo through magenta and salmon to cream. No channel ever
/// decreases, so luminance stays monotone after rounding to 8 bits.
pub fn colormap(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 6] = [
        [13.0, 8.0, 48.0],
        [60.0, 20.0, 120.0],
        [150.0, 40.0, 150.0],
        [230.0, 90.0, 150.0],
        [250.0, 170.0, 160.0],
        [255.0, 250.0, 220.0],
    ];
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mut rgb = [0u8; 3];
    for ch in 0..3 {
        let v = STOPS[i][ch] + f * (STOPS[i + 1][ch] - STOPS[i][ch]);
        rgb[ch] = v.round() as u8;
    }
    rgb
}

/// Rec. 709 relative luminance of an 8-bit color.
pub fn luminance(rgb: [u8; 3]) -> f64 {
    0.2126 * rgb[0] as f64 + 0.7152 * rgb[1] as f64 + 0.0722 * rgb[2] as f64
}

/// Decades shown below the maximum in log-scale heatmaps.
pub const LOG_DECADES: f64 = 8.0;

/// Maps a probability to `[0, 1]` relative to the grid maximum.
pub fn heat_value(p: f64, max: f64, log_scale: bool) -> f64 {
    if max <= 0.0 {
        return 0.0;
    }
    if log_scale {
        if p <= 0.0 {
            return 0.0;
        }
        ((p / max).log10() / LOG_DECADES + 1.0).clamp(0.0, 1.0)
    } else {
        (p / max).clamp(0.0, 1.0)
    }
}

/// `D×D` cells, each `scale×scale` pixels. Row 0 of the image is the
/// largest `k` so `k` increases upward; `m` increases to the right.
pub fn render_heatmap(joint: &JointProbability, scale: u32, log_scale: bool) -> RgbImage {
    let d = joint.dim as u32;
    let scale = scale.max(1);
    let max = joint.entries.iter().cloned().fold(0.0, f64::max);
    let mut img = RgbImage::new(d * scale, d * scale);
    for row in 0..d {
        for col in 0..d {
            let p = joint.at(row as usize, col as usize);
            let rgb = colormap(heat_value(p, max, log_scale));
            let y0 = (d - 1 - row) * scale;
            let x0 = col * scale;
            for dy in 0..scale {
                for dx in 0..scale {
                    img.put_pixel(x0 + dx, y0 + dy, Rgb(rgb));
                }
            }
        }
    }
    img
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| ReportError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, contents).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_heatmap(
    path: &Path,
    joint: &JointProbability,
    scale: u32,
    log_scale: bool,
) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    render_heatmap(joint, scale, log_scale).save(path)?;
    Ok(())
}

/// Run metadata written next to a data file as `<file>.meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub schema: u32,
    pub tool_version: String,
    pub command: Vec<String>,
    pub created_unix: u64,
    pub lmax: u32,
    pub abs_tol: f64,
    pub branch: PhaseBranch,
    pub axes: Value,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut name = data.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    data.with_file_name(name)
}

pub fn write_sidecar(data: &Path, sidecar: &Sidecar) -> Result<(), ReportError> {
    let text = serde_json::to_string_pretty(sidecar)? + "\n";
    write_text(&sidecar_path(data), &text)
}
