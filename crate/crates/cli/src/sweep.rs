//! Cartesian parameter sweeps, one run directory per combination.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use toml::Value;

use crate::config::{apply_override, RunConfig};
use crate::error::{CliError, CliResult};
use crate::simulate::{run_to_dir, Outcome};

/// `section.key=v1,v2,...`
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn parse(spec: &str) -> CliResult<Self> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("vary `{spec}` is not key=v1,v2,...")))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err(CliError::Usage(format!("vary `{spec}` has an empty value")));
        }
        Ok(Axis {
            key: key.trim().to_string(),
            values,
        })
    }
}

/// Every combination as a list of `key=value` assignments, first axis
/// slowest.
pub fn combinations(axes: &[Axis]) -> Vec<Vec<String>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(format!("{}={}", axis.key, v));
                    next
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub dir: PathBuf,
    pub assignments: Vec<String>,
    /// Final (t, α, |Γ|) or the error that stopped the run.
    pub outcome: Result<(f64, f64, f64), String>,
}

pub fn sweep(base: &Value, axes: &[Axis], root: &Path, base_dir: &Path, workers: usize) -> CliResult<Vec<SweepResult>> {
    let combos = combinations(axes);
    // Validate everything before starting any run.
    let configs = combos
        .iter()
        .map(|assignments| {
            let mut value = base.clone();
            for a in assignments {
                apply_override(&mut value, a)?;
            }
            RunConfig::from_value(value)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("workers: {e}")))?;
    let results = pool.install(|| {
        configs
            .par_iter()
            .zip(combos.par_iter())
            .enumerate()
            .map(|(i, (config, assignments))| {
                let dir = root.join(format!("run_{i:04}"));
                let outcome = run_to_dir(config, base_dir, &dir)
                    .map(|(_, o)| match o {
                        Outcome::Graph(t) => {
                            let r = t.rows.last().expect("rows");
                            (r.t, r.alpha, r.length)
                        }
                        Outcome::Curve(t, _) => {
                            let r = t.rows.last().expect("rows");
                            (r.t, r.alpha, r.length)
                        }
                    })
                    .map_err(|e| e.to_string());
                SweepResult {
                    dir,
                    assignments: assignments.clone(),
                    outcome,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(results)
}

pub fn write_summary(root: &Path, results: &[SweepResult]) -> CliResult<PathBuf> {
    let path = root.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
    let io = |e: csv::Error| CliError::io(&path, e);
    w.write_record(["run", "assignments", "t", "alpha", "length", "error"]).map_err(io)?;
    for r in results {
        let name = r.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let joined = r.assignments.join(";");
        let record = match &r.outcome {
            Ok((t, a, l)) => [name, joined, crate::output::fmt(*t), crate::output::fmt(*a), crate::output::fmt(*l), String::new()],
            Err(e) => [name, joined, String::new(), String::new(), String::new(), e.clone()],
        };
        w.write_record(&record).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
