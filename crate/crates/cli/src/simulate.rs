use std::fs;
use std::path::Path;
use std::time::Instant;

use grainflow::curve_solver::{run_curve, CurveRunOptions, CurveTrajectory, ExtinctionReport};
use grainflow::{graph_solver, Trajectory};

use crate::config::{Mode, RunConfig, Shape};
use crate::error::{CliError, CliResult};
use crate::output::{self, Manifest};

pub enum Outcome {
    Graph(Trajectory),
    Curve(CurveTrajectory, ExtinctionReport),
}

impl Outcome {
    pub fn steps(&self) -> usize {
        match self {
            Outcome::Graph(t) => t.steps(),
            Outcome::Curve(t, _) => t.rows.len() - 1,
        }
    }

    pub fn final_time(&self) -> f64 {
        match self {
            Outcome::Graph(t) => t.last().t,
            Outcome::Curve(_, r) => r.last_time,
        }
    }
}

/// Runs the solver described by `config`. `base` resolves `file` presets.
pub fn simulate(config: &RunConfig, base: &Path) -> CliResult<Outcome> {
    let params = config.solver_params();
    match config.run.mode {
        Mode::Graph => {
            let model = config.sigma_model()?;
            let u0 = config.graph_initial(base)?;
            let traj = graph_solver::run(u0, config.initial.alpha0, config.grid()?, &params, &model, config.output.snapshot_every)?;
            Ok(Outcome::Graph(traj))
        }
        Mode::Curve => {
            let curve = config.curve_initial(base)?;
            let options = CurveRunOptions {
                reparam_every: config.output.reparam_every,
                snapshot_every: config.output.snapshot_every,
                extinction_threshold: None,
            };
            let (traj, report) = run_curve(curve, &params, &config.curve_energy()?, &options)?;
            Ok(Outcome::Curve(traj, report))
        }
    }
}

impl Outcome {
    /// Bytes of diagnostics.csv for this outcome.
    pub fn diagnostics_csv(&self) -> Vec<u8> {
        match self {
            Outcome::Graph(t) => output::graph_diagnostics(t),
            Outcome::Curve(t, _) => output::curve_diagnostics(t),
        }
    }
}

/// Creates `dir` and copies a `file` preset into it, so the run can be
/// re-verified from the directory alone. Returns the config to record.
pub fn prepare_dir(config: &RunConfig, base: &Path, dir: &Path) -> CliResult<RunConfig> {
    output::create_dir(dir)?;
    let mut config = config.clone();
    if let Shape::File(path) = Shape::parse(&config.initial.shape)? {
        let src = base.join(path);
        let dst = dir.join("initial.csv");
        if src != dst {
            fs::copy(&src, &dst).map_err(|e| CliError::io(&src, e))?;
        }
        config.initial.shape = "file initial.csv".into();
    }
    Ok(config)
}

/// Writes diagnostics, snapshots (at the config's stride) and manifest.
pub fn persist(config: &RunConfig, outcome: &Outcome, dir: &Path, wall_time_s: f64) -> CliResult<()> {
    let every = config.output.snapshot_every;
    let (dt, status, extinction_time) = match outcome {
        Outcome::Graph(t) => {
            output::write_graph(dir, t, every)?;
            (t.dt, "completed".to_string(), None)
        }
        Outcome::Curve(t, r) => {
            output::write_curve(dir, t, every)?;
            let dt = if t.rows.len() > 1 { t.rows[1].t - t.rows[0].t } else { 0.0 };
            (dt, r.status.as_str().to_string(), r.extinction_time())
        }
    };
    Manifest {
        program: "grainflow".into(),
        version: grainflow_version(),
        config: config.clone(),
        dt,
        steps: outcome.steps(),
        final_time: outcome.final_time(),
        status,
        extinction_time,
        wall_time_s,
    }
    .write(dir)
}

/// Simulates `sim_config` and records the run under `config`.
pub fn simulate_into(config: &RunConfig, sim_config: &RunConfig, dir: &Path) -> CliResult<Outcome> {
    let started = Instant::now();
    let outcome = simulate(sim_config, dir)?;
    persist(config, &outcome, dir, started.elapsed().as_secs_f64())?;
    Ok(outcome)
}

/// Simulates and writes a complete run directory.
pub fn run_to_dir(config: &RunConfig, base: &Path, dir: &Path) -> CliResult<(RunConfig, Outcome)> {
    let config = prepare_dir(config, base, dir)?;
    let outcome = simulate_into(&config, &config, dir)?;
    Ok((config, outcome))
}

pub fn grainflow_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}
