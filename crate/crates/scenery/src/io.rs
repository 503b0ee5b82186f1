//! CSV and JSON artifacts. Every file is written to a temporary sibling and
//! renamed, so a crash never leaves a truncated artifact behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use scenery_core::brownian::BrownianPath;
use scenery_core::gaussian_field::{FeatureField, GaussianField};
use scenery_core::poisson_field::PoissonField;
use scenery_core::spectra::CovarianceSpec;

use crate::error::{csv_error, io_error, json_error, HarnessError, Result};

pub const CONFIG_FILE: &str = "config.json";
pub const METADATA_FILE: &str = "metadata.json";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const CONDITIONAL_FILE: &str = "conditional.csv";
pub const ORACLES_FILE: &str = "oracles.csv";
pub const LIMIT_FILE: &str = "limit.csv";
pub const REPORTS_FILE: &str = "reports.json";
pub const SUMMARY_FILE: &str = "summary.md";
pub const PARTS_DIR: &str = "parts";
pub const DUMPS_DIR: &str = "dumps";

/// `X_n(t)` of one replica at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: u64,
    pub replica: u64,
    pub t: f64,
    pub x: f64,
}

/// Path-conditional statistics of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    pub n: u64,
    pub replica: u64,
    pub cross: f64,
    pub variance: Option<f64>,
}

/// A quadrature or closed-form reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub quantity: String,
    pub n: Option<u64>,
    pub d: usize,
    pub mode: String,
    pub value: f64,
    pub tol: f64,
}

/// Local-time quadratic forms of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub replica: u64,
    /// Quadratic form of the configured probe.
    pub probe: f64,
    /// `int L_1(x)^2 dx`.
    pub unit: f64,
}

fn temporary(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temporary(path);
    fs::write(&tmp, bytes).map_err(io_error(&tmp))?;
    fs::rename(&tmp, path).map_err(io_error(path))
}

pub fn csv_bytes<T: Serialize>(rows: &[T], path: &Path) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(csv_error(path))?;
    }
    writer
        .into_inner()
        .map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e.into_error() })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows, path)?)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(csv_error(path))?;
    reader.deserialize().map(|row| row.map_err(csv_error(path))).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(json_error(path))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    serde_json::from_str(&text).map_err(json_error(path))
}

/// An isotropic covariance profile from `(x, R)` rows; a header row is optional.
pub fn read_tabulated_model(path: &Path, dim: usize) -> Result<CovarianceSpec> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error(path))?;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error(path))?;
        let parsed: Option<(f64, f64)> = match (record.get(0), record.get(1)) {
            (Some(x), Some(r)) => x.parse().ok().zip(r.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((x, r)) => {
                radii.push(x);
                values.push(r);
            }
            None if line == 0 => continue,
            None => {
                return Err(HarnessError::Malformed {
                    path: path.to_path_buf(),
                    reason: format!("row {} is not an (x, R) pair", line + 1),
                })
            }
        }
    }
    Ok(CovarianceSpec::Tabulated { dim, radii, values })
}

fn coordinate_header(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

fn write_records(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header).map_err(csv_error(path))?;
    for row in rows {
        writer
            .write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_error(path))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e.into_error() })?;
    write_atomic(path, &bytes)
}

/// Rows `step, t, x0, x1, ...`.
pub fn write_path_csv(path: &Path, brownian: &BrownianPath) -> Result<()> {
    let mut header = vec!["step".to_string(), "t".to_string()];
    header.extend(coordinate_header("x", brownian.dim()));
    let rows = (0..brownian.len()).map(|k| {
        let mut row = vec![k as f64, brownian.time(k)];
        row.extend_from_slice(brownian.point(k));
        row
    });
    write_records(path, header, rows)
}

/// Rows `x0, ..., value` over the grid nodes.
pub fn write_field_csv(path: &Path, field: &GaussianField) -> Result<()> {
    let mut header = coordinate_header("x", field.dim());
    header.push("value".into());
    let rows = field.nodes().map(|(mut x, v)| {
        x.push(v);
        x
    });
    write_records(path, header, rows)
}

/// Rows `k0, ..., phase` of a random-feature field.
pub fn write_features_csv(path: &Path, field: &FeatureField) -> Result<()> {
    let dim = field.frequencies().len() / field.features().max(1);
    let mut header = coordinate_header("k", dim);
    header.push("phase".into());
    let rows = (0..field.features()).map(|j| {
        let mut row = field.frequencies()[j * dim..(j + 1) * dim].to_vec();
        row.push(field.phases()[j]);
        row
    });
    write_records(path, header, rows)
}

/// Rows `x0, ...` of the Poisson points.
pub fn write_points_csv(path: &Path, field: &PoissonField) -> Result<()> {
    write_records(path, coordinate_header("x", field.dim()), field.points().map(|p| p.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_missing_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            TrajectoryRow { n: 4, replica: 0, t: 0.5, x: -1.25e-3 },
            TrajectoryRow { n: 4, replica: 1, t: 1.0, x: 0.1 + 0.2 },
        ];
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv::<TrajectoryRow>(&path).unwrap(), rows);
        assert!(!temporary(&path).exists());
        let missing = read_csv::<TrajectoryRow>(&dir.path().join("nope.csv"));
        assert!(matches!(missing, Err(HarnessError::MissingArtifact(_))));
    }

    #[test]
    fn tabulated_model_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let with = dir.path().join("with.csv");
        fs::write(&with, "x,R\n0,1\n0.5,0.5\n1,0\n").unwrap();
        let without = dir.path().join("without.csv");
        fs::write(&without, "0,1\n0.5,0.5\n1,0\n").unwrap();
        let a = read_tabulated_model(&with, 1).unwrap();
        assert_eq!(a, read_tabulated_model(&without, 1).unwrap());
        assert_eq!(a, CovarianceSpec::Tabulated { dim: 1, radii: vec![0.0, 0.5, 1.0], values: vec![1.0, 0.5, 0.0] });
        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "x,R\n0,1\nzero,0\n").unwrap();
        assert!(matches!(read_tabulated_model(&bad, 1), Err(HarnessError::Malformed { .. })));
    }
}
