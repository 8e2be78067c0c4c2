//! Periodic grid on the unit circle 𝕋 = ℝ/ℤ and the geometry of graphs over it.
//!
//! All stencils are centered second order with cyclic indexing; integrals use
//! the uniform rectangle rule, which is exact under summation by parts.

use crate::error::{Error, Result};
use crate::sigma::SigmaModel;

pub const MIN_POINTS: usize = 8;

/// Uniform periodic grid of `n` points on [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid1D {
    n: usize,
}

impl Grid1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_POINTS} points, got {n}"
            )));
        }
        Ok(Grid1D { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Samples `f` at the grid points.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points().map(f).collect()
    }

    /// Rectangle-rule integral over one period.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.dx()
    }
}

/// Graph x ↦ (x, u(x)) over 𝕋 together with the misorientation and time.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub grid: Grid1D,
    pub u: Vec<f64>,
    pub alpha: f64,
    pub t: f64,
}

impl GraphState {
    pub fn new(grid: Grid1D, u: Vec<f64>, alpha: f64, t: f64) -> Result<Self> {
        if u.len() != grid.n() {
            return Err(Error::Config(format!(
                "expected {} height samples, got {}",
                grid.n(),
                u.len()
            )));
        }
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::Config(format!("height sample {i} is not finite")));
        }
        if !alpha.is_finite() {
            return Err(Error::Config("misorientation is not finite".into()));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("time must be finite and >= 0, got {t}")));
        }
        Ok(GraphState { grid, u, alpha, t })
    }

    pub fn length(&self) -> f64 {
        curve_length(&self.u, &self.grid)
    }
}

/// Centered first difference (u[i+1] - u[i-1]) / 2dx.
pub fn d1(u: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = u.len();
    debug_assert_eq!(n, grid.n());
    let inv = 0.5 / grid.dx();
    (0..n)
        .map(|i| (u[(i + 1) % n] - u[(i + n - 1) % n]) * inv)
        .collect()
}

/// Compact second difference (u[i+1] - 2u[i] + u[i-1]) / dx².
pub fn d2(u: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = u.len();
    debug_assert_eq!(n, grid.n());
    let inv = 1.0 / (grid.dx() * grid.dx());
    (0..n)
        .map(|i| (u[(i + 1) % n] - 2.0 * u[i] + u[(i + n - 1) % n]) * inv)
        .collect()
}

/// v = √(1 + u_x²)
pub fn area_element(u: &[f64], grid: &Grid1D) -> Vec<f64> {
    d1(u, grid).into_iter().map(|p| p.hypot(1.0)).collect()
}

/// κ = (u_x / v)_x in flux form: the flux u_x/v is taken at the cell faces
/// i+½ and differenced back to the nodes, so Σκ·dx telescopes to zero.
pub fn curvature(u: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = u.len();
    let inv = 1.0 / grid.dx();
    let flux: Vec<f64> = (0..n)
        .map(|i| {
            let p = (u[(i + 1) % n] - u[i]) * inv;
            p / p.hypot(1.0)
        })
        .collect();
    (0..n).map(|i| (flux[i] - flux[(i + n - 1) % n]) * inv).collect()
}

/// Face area elements √(1 + (D₊u)²) at i+½.
pub fn face_area_element(u: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = u.len();
    let inv = 1.0 / grid.dx();
    (0..n).map(|i| ((u[(i + 1) % n] - u[i]) * inv).hypot(1.0)).collect()
}

/// Length of the periodic polygon through the grid values. Its time
/// derivative pairs exactly with [`curvature`] by summation by parts.
pub fn polygon_length(u: &[f64], grid: &Grid1D) -> f64 {
    grid.integrate(&face_area_element(u, grid))
}

/// |Γ| = ∫ v dx
pub fn curve_length(u: &[f64], grid: &Grid1D) -> f64 {
    grid.integrate(&area_element(u, grid))
}

/// E = σ(α)·|Γ|
pub fn energy(state: &GraphState, model: &SigmaModel) -> f64 {
    model.eval(state.alpha) * state.length()
}

/// (‖u_x‖², ‖u_xx‖², ‖u_xxx‖²) with derivatives from repeated [`d1`].
pub fn sobolev_norms(u: &[f64], grid: &Grid1D) -> (f64, f64, f64) {
    let sq = |w: &[f64]| grid.integrate(&w.iter().map(|x| x * x).collect::<Vec<_>>());
    let ux = d1(u, grid);
    let uxx = d1(&ux, grid);
    let uxxx = d1(&uxx, grid);
    (sq(&ux), sq(&uxx), sq(&uxxx))
}

pub(crate) fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
