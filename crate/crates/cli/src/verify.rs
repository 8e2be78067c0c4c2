use grainflow::curve_solver::{CurveTrajectory, ExtinctionReport};
use grainflow::diagnostics::{
    bound_checks, decay_fit, dissipation_residual, length_dissipation_check, monotonicity_series,
    resolved_tail, CheckReport, Tolerances, WeightFunction, ROUNDOFF_FLOOR,
};
use grainflow::{graph_solver, GraphState, SigmaModel, Trajectory};
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::output::fmt;

/// Minimum r² for a decay fit to count as exponential.
pub const MIN_R_SQUARED: f64 = 0.99;

/// Kernel must span this many grid cells for a monotonicity sample.
pub const KERNEL_RESOLUTION: f64 = 2.0;

/// Flat, serializable form of a [`CheckReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: &'static str,
    pub worst_violation: f64,
    pub location: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status != "fail"
    }
}

impl From<CheckReport> for CheckRecord {
    fn from(r: CheckReport) -> Self {
        let status = match (r.applicable, r.passed) {
            (false, _) => "n/a",
            (true, true) => "pass",
            (true, false) => "fail",
        };
        CheckRecord {
            name: r.name,
            status,
            worst_violation: r.worst_violation,
            location: r.location,
            tolerance: r.tolerance,
            note: String::new(),
        }
    }
}

fn skipped(name: &str, note: impl Into<String>) -> CheckRecord {
    let mut r: CheckRecord = CheckReport::not_applicable(name).into();
    r.note = note.into();
    r
}

/// rate > 0 and r² ≥ MIN_R_SQUARED, reported as two records. Series that
/// vanish identically have nothing to fit.
fn decay_checks(name: &str, series: &[(f64, f64)]) -> Vec<CheckRecord> {
    if series.iter().all(|p| p.1 == 0.0) {
        return vec![skipped(&format!("{name} decay"), "series is identically zero")];
    }
    match decay_fit(series, resolved_tail(series, ROUNDOFF_FLOOR)) {
        Ok(fit) => {
            let mut rate: CheckRecord = CheckReport::new(&format!("{name} decay rate"), -fit.rate, 0.0, 0.0).into();
            rate.note = format!("rate {}", fmt(fit.rate));
            let mut r2: CheckRecord =
                CheckReport::new(&format!("{name} decay fit"), MIN_R_SQUARED - fit.r_squared, 0.0, 0.0).into();
            r2.note = format!("r^2 {}", fmt(fit.r_squared));
            vec![rate, r2]
        }
        Err(e) => vec![skipped(&format!("{name} decay"), e.to_string())],
    }
}

pub fn graph_checks(traj: &Trajectory, model: &SigmaModel, tol: &Tolerances) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    match dissipation_residual(traj, tol) {
        Ok((_, r)) => out.push(r.into()),
        Err(e) => out.push(skipped("energy dissipation", e.to_string())),
    }
    let t0 = traj.last().t;
    match monotonicity_series(traj, model, 0.5, t0, WeightFunction::AreaElement, KERNEL_RESOLUTION, tol) {
        Ok((_, r)) => out.push(r.into()),
        Err(e) => out.push(skipped("weighted monotonicity", e.to_string())),
    }
    out.extend(bound_checks(traj, model, tol).into_iter().map(CheckRecord::from));
    match length_dissipation_check(traj, model, &traj.params, tol) {
        Ok((_, r)) => out.push(r.into()),
        Err(e) => out.push(skipped("length dissipation", e.to_string())),
    }
    let pick = |f: fn(&grainflow::graph_solver::DiagnosticsRow) -> f64| -> Vec<(f64, f64)> {
        traj.rows.iter().map(|r| (r.t, f(r))).collect()
    };
    out.extend(decay_checks("h1", &pick(|r| r.h1)));
    out.extend(decay_checks("sup_kappa", &pick(|r| r.sup_kappa)));
    let alpha0 = traj.rows[0].alpha;
    if model.satisfies_a2() && model.deriv(alpha0) != 0.0 {
        out.extend(decay_checks("alpha", &pick(|r| r.alpha.abs())));
    } else {
        out.push(skipped("alpha decay", "no misorientation drive"));
    }
    out
}

pub fn curve_checks(
    traj: &CurveTrajectory,
    report: &ExtinctionReport,
    model: &SigmaModel,
    mu: f64,
    tol: &Tolerances,
) -> Vec<CheckRecord> {
    let rows = &traj.rows;
    let first = rows[0];
    let mut out: Vec<CheckRecord> = Vec::new();
    let worst = |name: &str, samples: Vec<(f64, f64)>, tolerance: f64| -> CheckRecord {
        CheckReport::worst_of(name, samples, tolerance).into()
    };
    out.push(worst(
        "length bound",
        rows.iter().map(|r| (r.t, r.length - first.length)).collect(),
        tol.length_bound,
    ));
    out.push(if model.satisfies_a2() {
        worst(
            "misorientation bound",
            rows.iter().map(|r| (r.t, r.alpha.abs() - first.alpha.abs())).collect(),
            tol.alpha_bound,
        )
    } else {
        skipped("misorientation bound", "model does not satisfy (A2)")
    });
    // Circle comparison: the curve stays inside the shrinking circle of
    // radius √(R₀² − 2μC₁t) about the initial centroid, up to the mesh size.
    out.push(if model.satisfies_a1() {
        let r0 = first.enclosing_radius;
        let h = traj.snapshots[0].state.max_segment();
        worst(
            "circle enclosure",
            report
                .enclosing_radius
                .iter()
                .map(|&(t, r)| (t, r - (r0 * r0 - 2.0 * mu * model.c_lower() * t).max(0.0).sqrt()))
                .collect(),
            2.0 * h,
        )
    } else {
        skipped("circle enclosure", "model does not satisfy (A1)")
    });
    let mut status: CheckRecord = CheckReport::new(
        "curve topology",
        if report.status.as_str() == "topology_breakdown" { 1.0 } else { 0.0 },
        report.last_time,
        0.0,
    )
    .into();
    status.note = report.status.as_str().to_string();
    out.push(status);
    out
}

/// Checks for a finished run.
pub fn checks(config: &RunConfig, outcome: &crate::simulate::Outcome) -> Vec<CheckRecord> {
    let tol = Tolerances::for_grid(config.run.n);
    let model = config.sigma_model().expect("validated config");
    match (config.run.mode, outcome) {
        (Mode::Graph, crate::simulate::Outcome::Graph(t)) => graph_checks(t, &model, &tol),
        (Mode::Curve, crate::simulate::Outcome::Curve(t, r)) => curve_checks(t, r, &model, config.params.mu, &tol),
        _ => unreachable!("outcome matches the configured mode"),
    }
}

pub fn table(records: &[CheckRecord]) -> String {
    let width = records.iter().map(|r| r.name.len()).max().unwrap_or(4).max(5);
    let mut s = format!(
        "{:<width$}  {:<6}  {:>24}  {:>24}  {:>24}  note\n",
        "check", "status", "worst", "tolerance", "at t"
    );
    for r in records {
        s += &format!(
            "{:<width$}  {:<6}  {:>24}  {:>24}  {:>24}  {}\n",
            r.name,
            r.status,
            fmt(r.worst_violation),
            fmt(r.tolerance),
            fmt(r.location),
            r.note
        );
    }
    s
}

/// Upper bound on the snapshots kept by the in-memory verification run.
pub const MAX_VERIFY_SNAPSHOTS: usize = 4000;

/// The same run with snapshots dense enough for the snapshot-based checks.
/// The stride divides the configured one when possible, so every stored
/// snapshot is still produced.
pub fn verification_config(config: &RunConfig) -> RunConfig {
    let mut c = config.clone();
    if c.run.mode != Mode::Graph {
        return c;
    }
    let model = c.sigma_model().expect("validated config");
    let grid = c.grid().expect("validated config");
    let state = GraphState::new(grid, vec![0.0; grid.n()], c.initial.alpha0, 0.0).expect("flat state is valid");
    let steps = graph_solver::resolve_dt(&state, &c.solver_params(), &model).1;
    let every = c.output.snapshot_every;
    let need = steps.div_ceil(MAX_VERIFY_SNAPSHOTS).max(1);
    c.output.snapshot_every = (need..=every)
        .find(|d| every.is_multiple_of(*d))
        .unwrap_or_else(|| every * need.div_ceil(every));
    c
}
