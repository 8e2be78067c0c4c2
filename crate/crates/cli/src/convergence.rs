//! Refinement ladder: n, 2n, 4n, ... with dt divided by 4 per level.

use grainflow::diagnostics::{
    dissipation_residual, length_dissipation_check, max_residual, observed_order, trajectory_kernel, Tolerances,
};
use grainflow::{graph_solver, GraphState, TimeStep, Trajectory};
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::fmt;

pub const MIN_SOLUTION_ORDER: f64 = 1.8;
pub const MIN_RESIDUAL_ORDER: f64 = 1.5;

/// Stored floats above which a ladder refuses to run.
pub const MAX_LADDER_VALUES: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub n: usize,
    pub dt: f64,
    /// Largest |E| and |Γ| along the run, for the rounding floors.
    pub max_energy: f64,
    pub max_length: f64,
    pub dissipation: f64,
    pub length_dissipation: f64,
    pub kernel: f64,
}

/// Outcome for one refinement pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOrder {
    Measured(f64),
    /// Both errors vanish.
    Exact,
    /// The finer error is at its rounding floor, so no order can be read.
    Roundoff,
}

impl PairOrder {
    pub fn label(&self) -> String {
        match self {
            PairOrder::Measured(p) => format!("{p:.3}"),
            PairOrder::Exact => "exact".into(),
            PairOrder::Roundoff => "roundoff".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderRecord {
    pub name: String,
    pub orders: Vec<PairOrder>,
    pub minimum: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub levels: Vec<Level>,
    pub solution_errors: Vec<f64>,
    pub orders: Vec<OrderRecord>,
}

impl LadderReport {
    pub fn passed(&self) -> bool {
        self.orders.iter().all(|o| o.passed)
    }
}

/// Error pairs below this are treated as exact.
const EXACT: f64 = 1e-13;

/// Rounding level of a difference quotient (a(t+h) - a(t))/h, in units of
/// ε·|a|/h.
const QUOTIENT_ROUNDING: f64 = 8.0;

/// `floors[k]` is the rounding level of `errors[k]`.
fn order_record(name: &str, errors: &[f64], floors: &[f64], ratio: f64, minimum: f64) -> OrderRecord {
    let orders: Vec<PairOrder> = (0..errors.len() - 1)
        .map(|k| {
            let (coarse, fine) = (errors[k], errors[k + 1]);
            if coarse <= EXACT && fine <= EXACT {
                PairOrder::Exact
            } else if fine <= floors[k + 1] {
                PairOrder::Roundoff
            } else {
                PairOrder::Measured(observed_order(coarse, fine, ratio))
            }
        })
        .collect();
    let passed = orders.iter().all(|o| match o {
        PairOrder::Measured(p) => *p >= minimum,
        _ => true,
    });
    OrderRecord {
        name: name.to_string(),
        orders,
        minimum,
        passed,
    }
}

/// Kernel identity residual with the tabulated schedule of `traj`, at a few
/// fixed points and times shared by every level.
fn kernel_residual(traj: &Trajectory, config: &RunConfig) -> CliResult<f64> {
    let model = config.sigma_model()?;
    let t0 = traj.last().t;
    let kernel = trajectory_kernel(traj, &model, 0.5, t0)?;
    let [x0, y0] = kernel.x0;
    let mut worst: f64 = 0.0;
    for k in 1..=6 {
        let t = t0 * k as f64 / 8.0;
        for (dx, dy, angle) in [(0.0, 0.0, 0.0), (0.05, 0.02, 0.7), (-0.08, 0.03, 2.1), (0.1, -0.05, 4.0)] {
            let a = [f64::cos(angle), f64::sin(angle)];
            worst = worst.max(kernel.kernel_identity_residual([x0 + dx, y0 + dy], t, a)?);
        }
    }
    Ok(worst)
}

pub fn ladder(config: &RunConfig, levels: usize) -> CliResult<LadderReport> {
    if config.run.mode != Mode::Graph {
        return Err(CliError::Usage("run.mode: convergence ladders need mode = \"graph\"".into()));
    }
    if levels < 3 {
        return Err(CliError::Usage("levels: need at least 3".into()));
    }
    if config.params.t_end <= 0.0 {
        return Err(CliError::Usage("params.t_end: ladder needs t_end > 0".into()));
    }
    let model = config.sigma_model()?;
    let base = config.solver_params();
    let grid = config.grid()?;
    let state = GraphState::new(grid, config.graph_initial(std::path::Path::new("."))?, config.initial.alpha0, 0.0)?;
    let dt0 = match base.dt {
        TimeStep::Fixed(dt) if base.force_dt => dt,
        _ => graph_solver::resolve_dt(&state, &base, &model).0,
    };
    let finest_values = (config.run.n << (levels - 1)) as f64 * config.params.t_end / (dt0 / 4f64.powi(levels as i32 - 1));
    if finest_values > MAX_LADDER_VALUES as f64 {
        return Err(CliError::Usage(format!(
            "params.t_end: finest ladder level would store {finest_values:.2e} values; shorten t_end or lower run.n"
        )));
    }

    let mut finals = Vec::new();
    let mut out = Vec::new();
    let tol = Tolerances::default();
    for k in 0..levels {
        let mut c = config.clone();
        c.run.n = config.run.n << k;
        let dt = dt0 / 4f64.powi(k as i32);
        let mut params = base;
        params.dt = TimeStep::Fixed(dt);
        params.force_dt = true;
        let grid = c.grid()?;
        let u0 = c.graph_initial(std::path::Path::new("."))?;
        let traj = graph_solver::run(u0, c.initial.alpha0, grid, &params, &model, 1)?;
        let dissipation = dissipation_residual(&traj, &tol).map(|(s, _)| max_residual(&s))?;
        let length = length_dissipation_check(&traj, &model, &params, &tol).map(|(s, _)| max_residual(&s))?;
        let max_of = |f: fn(&grainflow::graph_solver::DiagnosticsRow) -> f64| {
            traj.rows.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
        };
        out.push(Level {
            n: c.run.n,
            dt: traj.dt,
            max_energy: max_of(|r| r.energy),
            max_length: max_of(|r| r.length),
            dissipation,
            length_dissipation: length,
            kernel: kernel_residual(&traj, &c)?,
        });
        finals.push(traj.last().u.clone());
    }

    // Differences between consecutive levels, sampled on the coarsest grid.
    let coarse = |u: &[f64], k: usize| -> Vec<f64> { u.iter().step_by(1 << k).cloned().collect() };
    let solution_errors: Vec<f64> = (0..levels - 1)
        .map(|k| {
            let (a, b) = (coarse(&finals[k], k), coarse(&finals[k + 1], k + 1));
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        })
        .collect();
    let pick = |f: fn(&Level) -> f64| out.iter().map(f).collect::<Vec<f64>>();
    let exact = vec![EXACT; levels];
    let energy_floor = pick(|l| QUOTIENT_ROUNDING * f64::EPSILON * l.max_energy / l.dt);
    // Centered over two steps.
    let length_floor = pick(|l| QUOTIENT_ROUNDING * f64::EPSILON * l.max_length / (2.0 * l.dt));
    let orders = vec![
        order_record("solution self-convergence", &solution_errors, &exact, 2.0, MIN_SOLUTION_ORDER),
        order_record("energy dissipation residual", &pick(|l| l.dissipation), &energy_floor, 2.0, MIN_RESIDUAL_ORDER),
        order_record(
            "length dissipation residual",
            &pick(|l| l.length_dissipation),
            &length_floor,
            2.0,
            MIN_RESIDUAL_ORDER,
        ),
        // The tabulated schedule error is second order in dt, which shrinks by 4.
        order_record("kernel identity residual (per dt)", &pick(|l| l.kernel), &exact, 4.0, MIN_RESIDUAL_ORDER),
    ];
    Ok(LadderReport {
        levels: out,
        solution_errors,
        orders,
    })
}

pub fn table(report: &LadderReport) -> String {
    let mut s = format!(
        "{:>8}  {:>24}  {:>24}  {:>24}  {:>24}\n",
        "n", "dt", "dissipation", "length dissipation", "kernel"
    );
    for l in &report.levels {
        s += &format!(
            "{:>8}  {:>24}  {:>24}  {:>24}  {:>24}\n",
            l.n,
            fmt(l.dt),
            fmt(l.dissipation),
            fmt(l.length_dissipation),
            fmt(l.kernel)
        );
    }
    s += "\n";
    for o in &report.orders {
        let orders: Vec<String> = o.orders.iter().map(PairOrder::label).collect();
        s += &format!(
            "{:<36}  {:<24}  min {:.2}  {}\n",
            o.name,
            orders.join(" "),
            o.minimum,
            if o.passed { "pass" } else { "fail" }
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_classification() {
        let r = order_record("x", &[4e-4, 1e-4, 1e-20], &[1e-12; 3], 2.0, 1.5);
        assert_eq!(r.orders, vec![PairOrder::Measured(2.0), PairOrder::Roundoff]);
        assert!(r.passed);
        let r = order_record("x", &[0.0, 1e-14], &[0.0; 2], 2.0, 1.5);
        assert_eq!(r.orders, vec![PairOrder::Exact]);
        let r = order_record("x", &[2e-4, 1e-4], &[0.0; 2], 2.0, 1.5);
        assert!(!r.passed);
    }
}
