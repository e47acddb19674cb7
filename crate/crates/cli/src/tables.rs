//! CSV tables written and read by the commands.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly, so anything rendered from a re-read table matches what
//! was rendered from memory.

use std::f64::consts::PI;
use std::path::Path;

use beamloc::MeasuredModes;
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// One grid point of one measured mode. `x_mm` in millimetres, curvature
/// in shape units per mm².
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ShapeRow {
    pub mode: usize,
    pub node: usize,
    pub x_mm: f64,
    pub shape: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FrequencyRow {
    pub mode: usize,
    pub healthy_rad_s: f64,
    pub damaged_rad_s: f64,
    pub healthy_hz: f64,
    pub damaged_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FusedRow {
    pub element: usize,
    pub mass: f64,
    pub belief: f64,
    pub plausibility: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub stage: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub evaluations: usize,
}

/// Young's moduli in GPa.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ProfileRow {
    pub element: usize,
    pub x_mid_mm: f64,
    pub youngs_gpa: f64,
    pub healthy_gpa: f64,
    pub true_gpa: f64,
    pub relative: f64,
}

/// Two-column `key,value` summaries.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub key: String,
    pub value: String,
}

pub fn write_summary(path: &Path, entries: &[(&str, String)]) -> Result<(), CliError> {
    write_table(
        path,
        &["key", "value"],
        entries.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )
}

pub fn summary_value<'a>(rows: &'a [SummaryRow], key: &str) -> Result<&'a str, CliError> {
    rows.iter()
        .find(|r| r.key == key)
        .map(|r| r.value.as_str())
        .ok_or_else(|| CliError::Input(format!("summary has no `{key}` entry")))
}

pub fn parse_f64(text: &str) -> Result<f64, CliError> {
    text.parse()
        .map_err(|_| CliError::Input(format!("not a number: {text}")))
}

pub fn write_measured(path: &Path, m: &MeasuredModes) -> Result<(), CliError> {
    let rows = (0..m.n_modes()).flat_map(|j| {
        (0..m.n_points()).map(move |i| {
            vec![
                (j + 1).to_string(),
                (i + 1).to_string(),
                fmt(m.grid[i] * 1e3),
                fmt(m.mode_shapes[(i, j)]),
                fmt(m.curvatures[(j, i)] * 1e-6),
            ]
        })
    });
    write_table(path, &["mode", "node", "x_mm", "shape", "curvature"], rows)
}

pub fn write_frequencies(
    path: &Path,
    healthy: &MeasuredModes,
    damaged: &MeasuredModes,
) -> Result<(), CliError> {
    let rows = healthy
        .frequencies
        .iter()
        .zip(damaged.frequencies.iter())
        .enumerate()
        .map(|(j, (h, d))| {
            vec![
                (j + 1).to_string(),
                fmt(*h),
                fmt(*d),
                fmt(h / (2.0 * PI)),
                fmt(d / (2.0 * PI)),
            ]
        });
    write_table(
        path,
        &[
            "mode",
            "healthy_rad_s",
            "damaged_rad_s",
            "healthy_hz",
            "damaged_hz",
        ],
        rows,
    )
}

/// Rebuilds a measurement from a shape table and its frequencies.
pub fn read_measured(shapes: &Path, frequencies: &[f64]) -> Result<MeasuredModes, CliError> {
    let rows: Vec<ShapeRow> = read_table(shapes)?;
    let m = rows.iter().map(|r| r.mode).max().unwrap_or(0);
    let n = rows.iter().map(|r| r.node).max().unwrap_or(0);
    if m == 0 || rows.len() != m * n || m != frequencies.len() {
        return Err(CliError::Input(format!(
            "{}: expected {} modes on a full grid, got {} rows",
            shapes.display(),
            frequencies.len(),
            rows.len()
        )));
    }
    let mut grid = vec![0.0; n];
    let mut phi = DMatrix::zeros(n, m);
    let mut kappa = DMatrix::zeros(m, n);
    for r in &rows {
        if r.mode == 0 || r.node == 0 {
            return Err(CliError::Input(format!(
                "{}: modes and nodes are 1-based",
                shapes.display()
            )));
        }
        grid[r.node - 1] = r.x_mm / 1e3;
        phi[(r.node - 1, r.mode - 1)] = r.shape;
        kappa[(r.mode - 1, r.node - 1)] = r.curvature * 1e6;
    }
    Ok(MeasuredModes {
        frequencies: DVector::from_column_slice(frequencies),
        mode_shapes: phi,
        curvatures: kappa,
        grid,
    })
}

/// Reads `measured_healthy.csv`, `measured_damaged.csv` and
/// `frequencies.csv` from a directory written by `synthesize`.
pub fn read_measured_dir(dir: &Path) -> Result<(MeasuredModes, MeasuredModes), CliError> {
    let freqs: Vec<FrequencyRow> = read_table(&dir.join("frequencies.csv"))?;
    let healthy: Vec<f64> = freqs.iter().map(|r| r.healthy_rad_s).collect();
    let damaged: Vec<f64> = freqs.iter().map(|r| r.damaged_rad_s).collect();
    let h = read_measured(&dir.join("measured_healthy.csv"), &healthy)?;
    let d = read_measured(&dir.join("measured_damaged.csv"), &damaged)?;
    Ok((h, d))
}
