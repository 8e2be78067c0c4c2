//! Executable checks over graph trajectories.
//!
//! Every check returns a [`CheckReport`]; `passed` is true exactly when the
//! worst violation does not exceed the tolerance. Signed quantities are
//! reported as "observed minus allowed", so a negative worst violation is a
//! margin.

use crate::error::{Error, Result};
use crate::geometry::{self, GraphState};
use crate::graph_solver::{Params, Trajectory};
use crate::kernel::{BackwardKernel, Conductivity};
use crate::sigma::SigmaModel;

/// Weight f in the monotonicity functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFunction {
    One,
    /// f = v = √(1+u_x²)
    AreaElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    /// Time of the worst violation.
    pub location: f64,
    pub tolerance: f64,
    /// False when the check's hypotheses do not hold for the model. Such a
    /// report always passes.
    pub applicable: bool,
}

impl CheckReport {
    pub fn new(name: &str, worst_violation: f64, location: f64, tolerance: f64) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: worst_violation <= tolerance,
            worst_violation,
            location,
            tolerance,
            applicable: true,
        }
    }

    pub fn not_applicable(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: true,
            worst_violation: 0.0,
            location: 0.0,
            tolerance: 0.0,
            applicable: false,
        }
    }

    /// Report on the largest (t, excess) sample.
    pub fn worst_of(name: &str, samples: impl IntoIterator<Item = (f64, f64)>, tolerance: f64) -> Self {
        let (t, worst) = samples
            .into_iter()
            .fold((0.0, f64::NEG_INFINITY), |acc, (t, e)| if e > acc.1 { (t, e) } else { acc });
        Self::new(name, worst, t, tolerance)
    }
}

/// Tolerances used by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative to max |dE/dt|.
    pub dissipation: f64,
    /// Relative to M at the first sample, per unit time.
    pub monotonicity: f64,
    pub max_principle: f64,
    pub alpha_bound: f64,
    pub length_bound: f64,
    pub gradient_bound: f64,
    /// Relative to max |d|Γ|/dt|.
    pub length_dissipation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            dissipation: 1e-3,
            monotonicity: 1e-4,
            max_principle: 1e-10,
            alpha_bound: 1e-12,
            length_bound: 1e-10,
            gradient_bound: 0.0,
            length_dissipation: 1e-3,
        }
    }
}

/// Grid size at which the default relative residual tolerances apply.
pub const REFERENCE_GRID: usize = 256;

impl Tolerances {
    /// Defaults with the residual tolerances widened by (256/n)² on coarser
    /// grids, matching the O(dx²) truncation error of the identities.
    pub fn for_grid(n: usize) -> Self {
        let scale = (REFERENCE_GRID as f64 / n as f64).powi(2).max(1.0);
        let base = Tolerances::default();
        Tolerances {
            dissipation: base.dissipation * scale,
            length_dissipation: base.length_dissipation * scale,
            ..base
        }
    }
}

/// One sample of a residual series: t, left side, right side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl ResidualSample {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Absolute floor under relative residual tolerances, so that stationary
/// runs (both sides zero up to round-off) pass.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

fn residual_report(name: &str, series: &[ResidualSample], relative: f64) -> CheckReport {
    let scale = series.iter().map(|s| s.lhs.abs().max(s.rhs.abs())).fold(0.0, f64::max);
    CheckReport::worst_of(name, series.iter().map(|s| (s.t, s.residual())), relative * scale + RESIDUAL_FLOOR)
}

/// Max residual of a series.
pub fn max_residual(series: &[ResidualSample]) -> f64 {
    series.iter().map(ResidualSample::residual).fold(0.0, f64::max)
}

/// Observed order from errors at two resolutions whose step differs by
/// `ratio`. Returns infinity when the fine error is zero.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    if fine == 0.0 {
        return f64::INFINITY;
    }
    (coarse / fine).ln() / ratio.ln()
}

/// Energy dissipation identity, one sample per step.
///
/// The left side is the difference quotient of E across the step (centered
/// at the half step); the right side is the discrete dissipation recorded by
/// the solver for that step.
pub fn dissipation_residual(
    traj: &Trajectory,
    tol: &Tolerances,
) -> Result<(Vec<ResidualSample>, CheckReport)> {
    if traj.rows.len() < 3 {
        return Err(Error::Diagnostic(format!(
            "dissipation residual needs at least 3 recorded states, got {}",
            traj.rows.len()
        )));
    }
    let mut series = Vec::with_capacity(traj.rows.len() - 1);
    for w in traj.rows.windows(2) {
        let dt = w[1].t - w[0].t;
        let rhs = w[1]
            .dissipation
            .ok_or_else(|| Error::Diagnostic(format!("missing dissipation at t = {}", w[1].t)))?;
        series.push(ResidualSample {
            t: 0.5 * (w[0].t + w[1].t),
            lhs: (w[1].energy - w[0].energy) / dt,
            rhs,
        });
    }
    let report = residual_report("energy dissipation", &series, tol.dissipation);
    Ok((series, report))
}

/// Piecewise linear periodic interpolation of u at x.
pub fn sample_periodic(state: &GraphState, x: f64) -> f64 {
    let n = state.grid.n();
    let s = x.rem_euclid(1.0) * n as f64;
    let i = s.floor() as usize % n;
    let w = s - s.floor();
    (1.0 - w) * state.u[i] + w * state.u[(i + 1) % n]
}

/// Backward kernel centered at (x0, u(x0, t0)) on the snapshot at t0, with
/// the conductivity tabulated from the recorded α series.
pub fn trajectory_kernel(traj: &Trajectory, model: &SigmaModel, x0: f64, t0: f64) -> Result<BackwardKernel> {
    let snap = traj
        .snapshots
        .iter()
        .find(|s| (s.state.t - t0).abs() <= 1e-12 * t0.abs().max(1.0))
        .ok_or_else(|| Error::Diagnostic(format!("no snapshot at t0 = {t0}")))?;
    let times = traj.times();
    let sigma = traj.rows.iter().map(|r| model.eval(r.alpha)).collect();
    let conductivity = Conductivity::tabulated(times, sigma)?;
    BackwardKernel::new([x0, sample_periodic(&snap.state, x0)], t0, traj.params.mu, conductivity)
}

/// σ ∫ f ρ v dx over the periodic extension of the graph.
///
/// The graph is a complete curve once extended periodically; integrating over
/// a single period would lose kernel mass through the cell boundary.
pub fn weighted_density(state: &GraphState, sigma: f64, kernel: &BackwardKernel, f: WeightFunction) -> Result<f64> {
    let grid = &state.grid;
    let tau = kernel.tau(state.t)?;
    let v = geometry::area_element(&state.u, grid);
    let reach = 10.0 * (4.0 * tau).sqrt() + 1.0;
    let x0 = kernel.x0[0];
    let (lo, hi) = ((x0 - reach).floor() as i64, (x0 + reach).ceil() as i64);
    let mut total = 0.0;
    for period in lo..hi {
        for i in 0..grid.n() {
            let x = grid.x(i) + period as f64;
            if (x - x0).abs() > reach {
                continue;
            }
            let weight = match f {
                WeightFunction::One => 1.0,
                WeightFunction::AreaElement => v[i],
            };
            total += weight * kernel.rho([x, state.u[i]], state.t)? * v[i];
        }
    }
    Ok(sigma * total * grid.dx())
}

/// Weighted monotonicity functional M(t) = σ(α(t)) ∫ f ρ d𝓗¹ at every
/// snapshot whose kernel width √τ spans at least `resolution` grid cells.
///
/// The check requires forward differences of M to stay below
/// `tol.monotonicity · M(first)` per unit time.
pub fn monotonicity_series(
    traj: &Trajectory,
    model: &SigmaModel,
    x0: f64,
    t0: f64,
    f: WeightFunction,
    resolution: f64,
    tol: &Tolerances,
) -> Result<(Vec<(f64, f64)>, CheckReport)> {
    if !model.satisfies_a1() {
        return Ok((Vec::new(), CheckReport::not_applicable("weighted monotonicity")));
    }
    if t0 > traj.last().t {
        return Err(Error::Diagnostic(format!("t0 = {t0} is past the final time {}", traj.last().t)));
    }
    let kernel = trajectory_kernel(traj, model, x0, t0)?;
    let min_tau = (resolution * traj.grid.dx()).powi(2);
    let mut series = Vec::new();
    for snap in traj.snapshots.iter().filter(|s| s.state.t < t0) {
        if kernel.tau(snap.state.t)? < min_tau {
            break;
        }
        let sigma = model.eval(snap.state.alpha);
        series.push((snap.state.t, weighted_density(&snap.state, sigma, &kernel, f)?));
    }
    if series.len() < 2 {
        return Err(Error::Diagnostic("monotonicity needs two resolved snapshots".into()));
    }
    let slack = tol.monotonicity * series[0].1;
    let report = CheckReport::worst_of(
        "weighted monotonicity",
        series.windows(2).map(|w| (w[1].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0))),
        slack,
    );
    Ok((series, report))
}

/// Maximum principle, misorientation bound, length bound and gradient
/// estimate, evaluated on the recorded rows.
pub fn bound_checks(traj: &Trajectory, model: &SigmaModel, tol: &Tolerances) -> Vec<CheckReport> {
    let rows = &traj.rows;
    let first = rows[0];
    let mut reports = vec![
        CheckReport::worst_of(
            "maximum principle",
            rows.iter().map(|r| (r.t, r.sup_u - first.sup_u)),
            tol.max_principle,
        ),
        if model.satisfies_a2() {
            CheckReport::worst_of(
                "misorientation bound",
                rows.iter().map(|r| (r.t, r.alpha.abs() - first.alpha.abs())),
                tol.alpha_bound,
            )
        } else {
            CheckReport::not_applicable("misorientation bound")
        },
        CheckReport::worst_of(
            "length bound",
            rows.iter().map(|r| (r.t, r.length - first.length)),
            tol.length_bound,
        ),
    ];
    reports.push(if model.satisfies_a1() {
        let bound = model.eval(first.alpha) / model.c_lower() * first.sup_v.powi(2);
        CheckReport::worst_of(
            "gradient estimate",
            rows.iter().map(|r| (r.t, r.sup_v - bound)),
            tol.gradient_bound,
        )
    } else {
        CheckReport::not_applicable("gradient estimate")
    });
    reports
}

/// d|Γ|/dt + μσ(α)∫κ²v dx = 0 at interior snapshots with equal spacing on
/// both sides.
pub fn length_dissipation_check(
    traj: &Trajectory,
    model: &SigmaModel,
    params: &Params,
    tol: &Tolerances,
) -> Result<(Vec<ResidualSample>, CheckReport)> {
    let snaps = &traj.snapshots;
    let mut series = Vec::new();
    for w in snaps.windows(3) {
        let (a, b, c) = (&w[0].state, &w[1].state, &w[2].state);
        let (h0, h1) = (b.t - a.t, c.t - b.t);
        if (h0 - h1).abs() > 1e-9 * h0.max(h1) {
            continue;
        }
        let grid = &b.grid;
        // Polygon length against Σ κ·(κv) with κ in flux form and κv the
        // graph operator u_xx/(1 + u_x²): by summation by parts this is the
        // exact derivative of the polygon length along the semi-discrete
        // flow, so the residual measures time error only.
        let kappa = geometry::curvature(&b.u, grid);
        let ux = geometry::d1(&b.u, grid);
        let uxx = geometry::d2(&b.u, grid);
        let k2v: Vec<f64> = (0..kappa.len())
            .map(|i| kappa[i] * uxx[i] / (1.0 + ux[i] * ux[i]))
            .collect();
        series.push(ResidualSample {
            t: b.t,
            lhs: (geometry::polygon_length(&c.u, grid) - geometry::polygon_length(&a.u, grid)) / (c.t - a.t),
            rhs: -params.mu * model.eval(b.alpha) * grid.integrate(&k2v),
        });
    }
    if series.is_empty() {
        return Err(Error::Diagnostic(
            "length dissipation needs three equally spaced snapshots".into(),
        ));
    }
    let report = residual_report("length dissipation", &series, tol.length_dissipation);
    Ok((series, report))
}

/// Exponential fit of a positive series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of log y against t on `window`; rate = -slope.
pub fn decay_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .cloned()
        .collect();
    if pts.len() < 10 {
        return Err(Error::Fit(format!("{} points in window, need at least 10", pts.len())));
    }
    if let Some((t, y)) = pts.iter().find(|(_, y)| !(*y > 1e-300)) {
        return Err(Error::Fit(format!("non-positive value {y} at t = {t}")));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_l = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut stt, mut stl, mut sll) = (0.0, 0.0, 0.0);
    for (t, y) in &pts {
        let (dt, dl) = (t - mean_t, y.ln() - mean_l);
        stt += dt * dt;
        stl += dt * dl;
        sll += dl * dl;
    }
    if stt == 0.0 {
        return Err(Error::Fit("window has a single abscissa".into()));
    }
    let slope = stl / stt;
    let r_squared = if sll == 0.0 { 1.0 } else { stl * stl / (stt * sll) };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        points: pts.len(),
    })
}

/// Default tail window [t_end/2, t_end].
pub fn tail_window(series: &[(f64, f64)]) -> (f64, f64) {
    let t_end = series.last().map_or(0.0, |p| p.0);
    (0.5 * t_end, t_end)
}

/// Tail window of the part of the series that stays above `floor · y(0)`.
/// Values below that are treated as round-off.
pub fn resolved_tail(series: &[(f64, f64)], floor: f64) -> (f64, f64) {
    let cutoff = floor * series.first().map_or(0.0, |p| p.1);
    let end = series.iter().take_while(|p| p.1 > cutoff).last().map_or(0.0, |p| p.0);
    (0.5 * end, end)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticStatus {
    Converged,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub status: AsymptoticStatus,
    pub u_infinity: f64,
    pub spread: f64,
    pub sup_ux: f64,
    pub sup_kappa: f64,
    pub kappa_fit: Option<DecayFit>,
    pub h1_fit: Option<DecayFit>,
}

/// Spread below which the final state counts as constant.
pub const CONSTANT_SPREAD: f64 = 1e-6;

/// Relative level below which a decaying series is treated as round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-9;

/// Long-time behavior: the limit constant u_∞ (final mean) and fitted decay
/// of sup|κ| and ‖u_x‖₂² on their resolved tails.
pub fn asymptotics_report(traj: &Trajectory) -> AsymptoticsReport {
    let last = traj.last();
    let grid = &last.grid;
    let u_infinity = grid.integrate(&last.u);
    let spread = last.u.iter().map(|u| (u - u_infinity).abs()).fold(0.0, f64::max);
    let sup_ux = geometry::sup_abs(&geometry::d1(&last.u, grid));
    let sup_kappa = geometry::sup_abs(&geometry::curvature(&last.u, grid));
    let fit = |pick: fn(&crate::graph_solver::DiagnosticsRow) -> f64| {
        let series: Vec<(f64, f64)> = traj.rows.iter().map(|r| (r.t, pick(r))).collect();
        decay_fit(&series, resolved_tail(&series, ROUNDOFF_FLOOR)).ok()
    };
    let status = if spread <= CONSTANT_SPREAD && sup_kappa < CONSTANT_SPREAD {
        AsymptoticStatus::Converged
    } else {
        AsymptoticStatus::Inconclusive
    };
    AsymptoticsReport {
        status,
        u_infinity,
        spread,
        sup_ux,
        sup_kappa,
        kappa_fit: fit(|r| r.sup_kappa),
        h1_fit: fit(|r| r.h1),
    }
}
