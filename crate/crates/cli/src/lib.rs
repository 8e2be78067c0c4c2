//! Library side of the `grainflow` command-line tool.

pub mod config;
pub mod convergence;
pub mod error;
pub mod output;
pub mod plot;
pub mod simulate;
pub mod sweep;
pub mod verify;

use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use config::RunConfig;
use error::{CliError, CliResult};
use serde::Serialize;
use verify::CheckRecord;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "GRAINFLOW_OUT";
pub const DEFAULT_OUT_ROOT: &str = "runs";
pub const REPORT: &str = "report.json";

/// Output directory: explicit, or `$GRAINFLOW_OUT/<mode>-<config hash>`.
pub fn resolve_out(explicit: Option<&Path>, config: &RunConfig) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from);
    let mut h = DefaultHasher::new();
    toml::to_string(config).expect("config serializes").hash(&mut h);
    let mode = match config.run.mode {
        config::Mode::Graph => "graph",
        config::Mode::Curve => "curve",
    };
    root.join(format!("{mode}-{:016x}", h.finish()))
}

/// Summary printed by `run`.
pub fn run_summary(dir: &Path, outcome: &simulate::Outcome) -> String {
    let mut s = format!("wrote {}\n", dir.display());
    match outcome {
        simulate::Outcome::Graph(t) => {
            let r = t.rows.last().expect("rows");
            s += &format!(
                "graph: {} steps of {}, t = {}, alpha = {}, length = {}\n",
                t.steps(),
                output::fmt(t.dt),
                output::fmt(r.t),
                output::fmt(r.alpha),
                output::fmt(r.length)
            );
        }
        simulate::Outcome::Curve(t, report) => {
            let r = t.rows.last().expect("rows");
            s += &format!(
                "curve: {} steps, status {}, t = {}, alpha = {}, length = {}\n",
                t.rows.len() - 1,
                report.status.as_str(),
                output::fmt(report.last_time),
                output::fmt(r.alpha),
                output::fmt(r.length)
            );
            if let Some(te) = report.extinction_time() {
                s += &format!("extinction time {}\n", output::fmt(te));
            }
        }
    }
    s
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    passed: bool,
    checks: &'a [CheckRecord],
}

pub fn write_report(dir: &Path, records: &[CheckRecord]) -> CliResult<()> {
    let path = dir.join(REPORT);
    let doc = ReportDoc {
        passed: records.iter().all(CheckRecord::passed),
        checks: records,
    };
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

/// Simulates a config into `dir`, runs every applicable check and writes
/// report.json.
pub fn verify_config(config: &RunConfig, base: &Path, dir: &Path) -> CliResult<Vec<CheckRecord>> {
    let config = simulate::prepare_dir(config, base, dir)?;
    let dense = verify::verification_config(&config);
    let outcome = simulate::simulate_into(&config, &dense, dir)?;
    let records = verify::checks(&config, &outcome);
    write_report(dir, &records)?;
    Ok(records)
}

/// Re-simulates a saved run from its manifest, checks that the diagnostics
/// reproduce byte for byte, and runs the checks.
pub fn verify_dir(dir: &Path) -> CliResult<Vec<CheckRecord>> {
    let manifest = output::Manifest::read(dir)?;
    let saved_path = dir.join(output::DIAGNOSTICS);
    let saved = fs::read(&saved_path).map_err(|e| CliError::io(&saved_path, e))?;
    let config = manifest.config;
    let outcome = simulate::simulate(&verify::verification_config(&config), dir)?;
    let fresh = outcome.diagnostics_csv();
    let mut reproduce: CheckRecord = grainflow::diagnostics::CheckReport::new(
        "reproducibility",
        if fresh == saved { 0.0 } else { 1.0 },
        0.0,
        0.0,
    )
    .into();
    if fresh != saved {
        reproduce.note = "re-simulated diagnostics.csv differs from the saved file".into();
    }
    let mut records = vec![reproduce];
    records.extend(verify::checks(&config, &outcome));
    write_report(dir, &records)?;
    Ok(records)
}

/// Exit status for a list of checks.
pub fn checks_result(records: &[CheckRecord]) -> CliResult<()> {
    let failed = records.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failed))
    }
}
