//! Run directory layout and CSV I/O.
//!
//! ```text
//! <run>/manifest.json
//! <run>/diagnostics.csv
//! <run>/snapshots/step_00000000.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use grainflow::curve_solver::{CurveRow, CurveTrajectory};
use grainflow::graph_solver::DiagnosticsRow;
use grainflow::Trajectory;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const SNAPSHOTS: &str = "snapshots";

pub const GRAPH_COLUMNS: [&str; 10] = ["t", "alpha", "E", "length", "sup_v", "sup_u", "h1", "h2", "h3", "sup_kappa"];
pub const CURVE_COLUMNS: [&str; 7] = ["t", "alpha", "E", "length", "sup_kappa", "enclosing_radius", "mean_radius"];

/// 17 significant digits, so values round-trip exactly.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    pub config: RunConfig,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extinction_time: Option<f64>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::io(&path, e))?;
        manifest.config.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir.join(SNAPSHOTS)).map_err(|e| CliError::io(dir, e))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter().map(fmt)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(SNAPSHOTS).join(format!("step_{step:08}.csv"))
}

pub fn graph_row(r: &DiagnosticsRow) -> Vec<f64> {
    vec![r.t, r.alpha, r.energy, r.length, r.sup_v, r.sup_u, r.h1, r.h2, r.h3, r.sup_kappa]
}

pub fn curve_row(r: &CurveRow) -> Vec<f64> {
    vec![r.t, r.alpha, r.energy, r.length, r.sup_kappa, r.enclosing_radius, r.mean_radius]
}

/// Contents of diagnostics.csv.
pub fn graph_diagnostics(traj: &Trajectory) -> Vec<u8> {
    csv_bytes(&GRAPH_COLUMNS, traj.rows.iter().map(graph_row))
}

pub fn curve_diagnostics(traj: &CurveTrajectory) -> Vec<u8> {
    csv_bytes(&CURVE_COLUMNS, traj.rows.iter().map(curve_row))
}

fn keep(step: usize, last: usize, every: usize) -> bool {
    step.is_multiple_of(every) || step == last
}

/// Writes diagnostics and the snapshots whose step is a multiple of
/// `every` (plus the last one).
pub fn write_graph(dir: &Path, traj: &Trajectory, every: usize) -> CliResult<()> {
    write_file(&dir.join(DIAGNOSTICS), &graph_diagnostics(traj))?;
    let last = traj.steps();
    for snap in traj.snapshots.iter().filter(|s| keep(s.step, last, every)) {
        let grid = &snap.state.grid;
        let rows = snap.state.u.iter().enumerate().map(|(i, u)| vec![grid.x(i), *u]);
        write_file(&snapshot_path(dir, snap.step), &csv_bytes(&["x", "u"], rows))?;
    }
    Ok(())
}

pub fn write_curve(dir: &Path, traj: &CurveTrajectory, every: usize) -> CliResult<()> {
    write_file(&dir.join(DIAGNOSTICS), &curve_diagnostics(traj))?;
    let last = traj.snapshots.last().map_or(0, |s| s.step);
    for snap in traj.snapshots.iter().filter(|s| keep(s.step, last, every)) {
        let rows = snap.state.pts.iter().map(|p| vec![p[0], p[1]]);
        write_file(&snapshot_path(dir, snap.step), &csv_bytes(&["x", "y"], rows))?;
    }
    Ok(())
}

/// A numeric CSV with its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::io(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            // Line 1 is the header.
            let line = i + 2;
            let record = record.map_err(|e| CliError::io(path, format!("line {line}: {e}")))?;
            let row = record
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| CliError::io(path, format!("line {line}: {e}")))?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Snapshot files in step order.
pub fn list_snapshots(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let snap_dir = dir.join(SNAPSHOTS);
    let mut files: Vec<PathBuf> = fs::read_dir(&snap_dir)
        .map_err(|e| CliError::io(&snap_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}
