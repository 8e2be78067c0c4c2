//! Time stepping for periodic graphs
//!
//! ```text
//! u_t = μ σ(α) u_xx / (1 + u_x²),    α_t = -γ σ'(α) |Γ_t|
//! ```
//!
//! Each step is a two-pass predictor-corrector. The predictor takes an Euler
//! step for α and a Crank-Nicolson step for u with the coefficient
//! 1/(1 + u_x²) frozen at the old level; the corrector repeats both with the
//! trapezoid rule for α (old and predicted lengths) and the coefficient and
//! mobility evaluated at the half step. Every u-solve is one cyclic
//! tridiagonal system with an M-matrix on the left and unit row sums on both
//! sides, so under the stability cap the discrete maximum principle holds and
//! the step is second order in time.

use crate::error::{Error, Result};
use crate::geometry::{self, d1, GraphState, Grid1D};
use crate::linalg::CyclicTridiagonal;
use crate::sigma::SigmaModel;

/// Time step selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// Use [`stable_dt`] of the initial state.
    Auto,
    /// Use the given step, capped by [`stable_dt`] unless forced.
    Fixed(f64),
}

/// Physical and numerical parameters shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub mu: f64,
    pub gamma: f64,
    pub dt: TimeStep,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Skip the stability cap on a fixed time step.
    pub force_dt: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            mu: 1.0,
            gamma: 1.0,
            dt: TimeStep::Auto,
            t_end: 1.0,
            cfl_safety: 0.5,
            force_dt: false,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("mu", self.mu)?;
        positive("gamma", self.gamma)?;
        if let TimeStep::Fixed(dt) = self.dt {
            positive("dt", dt)?;
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

/// Explicit diffusive limit cfl_safety·dx²/(μσ(α)); +∞ when σ(α) = 0.
pub fn stable_dt(state: &GraphState, params: &Params, model: &SigmaModel) -> f64 {
    let dx = state.grid.dx();
    let rate = params.mu * model.eval(state.alpha);
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    params.cfl_safety * dx * dx / rate
}

/// Advances the state by `dt`. `index` is only used to label errors.
pub fn step(
    state: &GraphState,
    dt: f64,
    params: &Params,
    model: &SigmaModel,
    index: usize,
) -> Result<GraphState> {
    let grid = state.grid;
    let gamma = params.gamma;
    let alpha = state.alpha;
    let length = state.length();

    // Predictor: Euler for α, Crank-Nicolson for u with the old coefficient.
    let alpha_pred = alpha - dt * gamma * model.deriv(alpha) * length;
    let u_pred = crank_nicolson(
        &state.u,
        &state.u,
        dt * params.mu * model.eval(0.5 * (alpha + alpha_pred)),
        &grid,
    )?;

    // Corrector: trapezoid for α with the predicted length, Crank-Nicolson
    // for u with the coefficient and mobility at the half step.
    let length_pred = geometry::curve_length(&u_pred, &grid);
    let alpha_new = alpha
        - 0.5 * dt * gamma * (model.deriv(alpha) * length + model.deriv(alpha_pred) * length_pred);
    let u_half: Vec<f64> = state.u.iter().zip(&u_pred).map(|(a, b)| 0.5 * (a + b)).collect();
    let u_new = crank_nicolson(
        &state.u,
        &u_half,
        dt * params.mu * model.eval(0.5 * (alpha + alpha_new)),
        &grid,
    )?;

    let t = state.t + dt;
    if !alpha_new.is_finite() || u_new.iter().any(|x| !x.is_finite()) {
        return Err(Error::Divergence { step: index, t });
    }
    Ok(GraphState {
        grid,
        u: u_new,
        alpha: alpha_new,
        t,
    })
}

// (I - ½hC D₂) u_new = (I + ½hC D₂) u with C = 1/(1 + (D₁w)²), h = dt·μσ.
// Both sides have unit row sums; the right side is nonnegative while
// h/dx² ≤ 1, which the stability cap guarantees.
fn crank_nicolson(u: &[f64], frozen: &[f64], h: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    if h == 0.0 {
        return Ok(u.to_vec());
    }
    let n = u.len();
    let scale = 0.5 * h / (grid.dx() * grid.dx());
    let coef: Vec<f64> = d1(frozen, grid)
        .into_iter()
        .map(|p| scale / (1.0 + p * p))
        .collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            u[i] * (1.0 - 2.0 * coef[i]) + coef[i] * (u[(i + 1) % n] + u[(i + n - 1) % n])
        })
        .collect();
    let system = CyclicTridiagonal::new(
        coef.iter().map(|c| -c).collect(),
        coef.iter().map(|c| 1.0 + 2.0 * c).collect(),
        coef.iter().map(|c| -c).collect(),
    );
    system.solve(&rhs)
}

/// Per-step diagnostic row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub alpha: f64,
    pub energy: f64,
    pub length: f64,
    pub sup_v: f64,
    pub sup_u: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub sup_kappa: f64,
    /// Right side of the energy dissipation identity on the step that ended
    /// at this row, built from the discrete velocities. `None` on row 0.
    pub dissipation: Option<f64>,
}

impl DiagnosticsRow {
    pub fn of(state: &GraphState, model: &SigmaModel) -> Self {
        let grid = &state.grid;
        let v = geometry::area_element(&state.u, grid);
        let length = grid.integrate(&v);
        let (h1, h2, h3) = geometry::sobolev_norms(&state.u, grid);
        DiagnosticsRow {
            t: state.t,
            alpha: state.alpha,
            energy: model.eval(state.alpha) * length,
            length,
            sup_v: v.iter().cloned().fold(1.0, f64::max),
            sup_u: geometry::sup_abs(&state.u),
            h1,
            h2,
            h3,
            sup_kappa: geometry::sup_abs(&geometry::curvature(&state.u, grid)),
            dissipation: None,
        }
    }
}

/// -(1/γ)|α_t|² - (1/μ)∫ (u_t/v)² v dx with difference quotients over one
/// step and v averaged over its two ends.
pub fn discrete_dissipation(old: &GraphState, new: &GraphState, params: &Params) -> f64 {
    let dt = new.t - old.t;
    let grid = &old.grid;
    let v0 = geometry::area_element(&old.u, grid);
    let v1 = geometry::area_element(&new.u, grid);
    let alpha_rate = (new.alpha - old.alpha) / dt;
    let normal: Vec<f64> = (0..old.u.len())
        .map(|i| {
            let ut = (new.u[i] - old.u[i]) / dt;
            ut * ut / (0.5 * (v0[i] + v1[i]))
        })
        .collect();
    -alpha_rate * alpha_rate / params.gamma - grid.integrate(&normal) / params.mu
}

/// Stored state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub state: GraphState,
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    /// Uniform step actually used.
    pub dt: f64,
    pub params: Params,
    pub snapshots: Vec<Snapshot>,
    /// One row per step plus the initial row.
    pub rows: Vec<DiagnosticsRow>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn initial(&self) -> &GraphState {
        &self.snapshots[0].state
    }

    pub fn last(&self) -> &GraphState {
        &self.snapshots[self.snapshots.len() - 1].state
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// Resolves the uniform step used by [`run`]: the requested step (or the
/// stability limit) is capped and then shrunk so that t_end is hit exactly.
pub fn resolve_dt(state: &GraphState, params: &Params, model: &SigmaModel) -> (f64, usize) {
    if params.t_end == 0.0 {
        return (0.0, 0);
    }
    let limit = stable_dt(state, params, model);
    // σ(α0) = 0: pure ODE dynamics, use the σ ≡ 1 limit for accuracy.
    let limit = if limit.is_finite() {
        limit
    } else {
        params.cfl_safety * state.grid.dx().powi(2) / params.mu
    };
    let requested = match params.dt {
        TimeStep::Auto => limit,
        TimeStep::Fixed(dt) if params.force_dt => dt,
        TimeStep::Fixed(dt) => dt.min(limit),
    };
    let steps = (params.t_end / requested - 1e-9).ceil().max(1.0) as usize;
    (params.t_end / steps as f64, steps)
}

/// Integrates from `u0` to `params.t_end`.
///
/// Diagnostics are recorded every step; snapshots every `snapshot_every`
/// steps plus the first and last state.
pub fn run(
    u0: Vec<f64>,
    alpha0: f64,
    grid: Grid1D,
    params: &Params,
    model: &SigmaModel,
    snapshot_every: usize,
) -> Result<Trajectory> {
    params.validate()?;
    if snapshot_every == 0 {
        return Err(Error::Config("snapshot_every must be >= 1".into()));
    }
    let mut state = GraphState::new(grid, u0, alpha0, 0.0)?;
    let (dt, steps) = resolve_dt(&state, params, model);

    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(DiagnosticsRow::of(&state, model));
    let mut snapshots = vec![Snapshot {
        step: 0,
        state: state.clone(),
    }];

    for k in 1..=steps {
        let mut next = step(&state, dt, params, model, k)?;
        // Keep the final time exact.
        next.t = if k == steps { params.t_end } else { k as f64 * dt };
        let mut row = DiagnosticsRow::of(&next, model);
        row.dissipation = Some(discrete_dissipation(&state, &next, params));
        rows.push(row);
        if k % snapshot_every == 0 || k == steps {
            snapshots.push(Snapshot {
                step: k,
                state: next.clone(),
            });
        }
        state = next;
    }

    Ok(Trajectory {
        grid,
        dt,
        params: *params,
        snapshots,
        rows,
    })
}
