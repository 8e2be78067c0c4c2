use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grainflow_cli::config::{apply_override, default_value, merge, RunConfig};
use grainflow_cli::error::{CliError, CliResult};
use grainflow_cli::{convergence, plot, resolve_out, run_summary, simulate, sweep, verify};

#[derive(Parser)]
#[command(name = "grainflow", version, about = "Grain boundary curve shortening with misorientation dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write a run directory.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Run directory (default: $GRAINFLOW_OUT/<mode>-<hash>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every applicable check on a fresh run or a saved run directory.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Re-verify a saved run directory instead of simulating a config.
        #[arg(long, conflicts_with = "out")]
        run_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement ladder with measured convergence orders.
    Convergence {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of levels (n, 2n, 4n, ...).
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Write SVG plots for a run directory.
    Plot {
        run_dir: PathBuf,
        /// Output directory (default: the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cartesian product of parameter lists in parallel.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// section.key=v1,v2,... (repeatable).
        #[arg(long = "vary", required = true)]
        vary: Vec<String>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Root directory for the run directories.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any key: section.key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Grid points (graph) or vertices (curve).
    #[arg(long)]
    n: Option<usize>,
    /// constant c | sine a k [b] | circle R | ellipse a b | file PATH
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    alpha0: Option<f64>,
    /// quadratic_shifted | quadratic | constant
    #[arg(long)]
    sigma: Option<String>,
    /// Comma-separated sigma parameters.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sigma_params: Option<Vec<f64>>,
    #[arg(long)]
    anisotropy: Option<f64>,
    #[arg(long)]
    fold: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// "auto" or a number.
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Use the requested dt even above the stability limit.
    #[arg(long)]
    force_dt: bool,
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    reparam_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn quoted(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

impl ConfigArgs {
    /// Raw configuration table with every flag applied, plus the directory
    /// that relative file presets resolve against.
    fn value(&self) -> CliResult<(toml::Value, PathBuf)> {
        let mut value = default_value();
        let base = match &self.config {
            Some(path) => {
                merge(&mut value, RunConfig::load(path)?);
                path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
            }
            None => PathBuf::from("."),
        };
        let mut sets: Vec<String> = Vec::new();
        let mut push = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                sets.push(format!("{key}={v}"));
            }
        };
        push("run.mode", self.mode.as_deref().map(quoted));
        push("run.n", self.n.map(|x| x.to_string()));
        push("run.seed", self.seed.map(|x| x.to_string()));
        push("initial.shape", self.initial.as_deref().map(quoted));
        push("initial.alpha0", self.alpha0.map(float));
        push("sigma.kind", self.sigma.as_deref().map(quoted));
        push(
            "sigma.params",
            self.sigma_params
                .as_ref()
                .map(|p| format!("[{}]", p.iter().map(|x| float(*x)).collect::<Vec<_>>().join(", "))),
        );
        push("sigma.anisotropy", self.anisotropy.map(float));
        push("sigma.fold", self.fold.map(float));
        push("params.mu", self.mu.map(float));
        push("params.gamma", self.gamma.map(float));
        push(
            "params.dt",
            self.dt.as_deref().map(|d| if d == "auto" { quoted(d) } else { d.to_string() }),
        );
        push("params.t_end", self.t_end.map(float));
        push("params.cfl_safety", self.cfl.map(float));
        push("params.force_dt", self.force_dt.then(|| "true".to_string()));
        push("output.snapshot_every", self.snapshot_every.map(|x| x.to_string()));
        push("output.reparam_every", self.reparam_every.map(|x| x.to_string()));
        for s in self.set.iter().chain(sets.iter()) {
            apply_override(&mut value, s)?;
        }
        Ok((value, base))
    }

    fn resolve(&self) -> CliResult<(RunConfig, PathBuf)> {
        let (value, base) = self.value()?;
        Ok((RunConfig::from_value(value)?, base))
    }
}

/// TOML float literal (always with a decimal point or exponent).
fn float(x: f64) -> String {
    toml::Value::Float(x).to_string()
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, out } => {
            let (config, base) = config.resolve()?;
            let dir = resolve_out(out.as_deref(), &config);
            let (_, outcome) = simulate::run_to_dir(&config, &base, &dir)?;
            print!("{}", run_summary(&dir, &outcome));
            Ok(())
        }
        Command::Verify { config, run_dir, out } => {
            let records = match run_dir {
                Some(dir) => grainflow_cli::verify_dir(&dir)?,
                None => {
                    let (config, base) = config.resolve()?;
                    let dir = resolve_out(out.as_deref(), &config);
                    let records = grainflow_cli::verify_config(&config, &base, &dir)?;
                    println!("wrote {}", dir.display());
                    records
                }
            };
            print!("{}", verify::table(&records));
            grainflow_cli::checks_result(&records)
        }
        Command::Convergence { config, levels } => {
            let (config, _) = config.resolve()?;
            let report = convergence::ladder(&config, levels)?;
            print!("{}", convergence::table(&report));
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::ChecksFailed(report.orders.iter().filter(|o| !o.passed).count()))
            }
        }
        Command::Plot { run_dir, out } => {
            let out = out.unwrap_or_else(|| run_dir.clone());
            for path in plot::plot_run(&run_dir, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Sweep {
            config,
            vary,
            workers,
            out,
        } => {
            let (value, base) = config.value()?;
            let axes = vary.iter().map(|v| sweep::Axis::parse(v)).collect::<CliResult<Vec<_>>>()?;
            let results = sweep::sweep(&value, &axes, &out, &base, workers)?;
            let summary = sweep::write_summary(&out, &results)?;
            let failed = results.iter().filter(|r| r.outcome.is_err()).count();
            println!("{} runs, {failed} failed; summary in {}", results.len(), summary.display());
            for r in results.iter().filter(|r| r.outcome.is_err()) {
                eprintln!("{}: {}", r.dir.display(), r.outcome.as_ref().unwrap_err());
            }
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::ChecksFailed(failed))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grainflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
