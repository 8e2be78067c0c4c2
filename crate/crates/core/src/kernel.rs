//! Backward heat kernel with time-dependent conductivity.
//!
//! ```text
//! ρ(X, t) = (4π τ)^(-1/2) exp(-|X - X₀|² / 4τ),   τ = Σ(t₀) - Σ(t),
//! Σ(t) = μ ∫₀ᵗ σ(α(s)) ds
//! ```
//!
//! The normalization exponent is ½ (codimension one in the plane), so the
//! kernel integrates to one along any straight line through X₀.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest admissible τ = Σ(t₀) - Σ(t).
pub const TAU_GUARD: f64 = 1e-12;

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Source of the conductivity schedule t ↦ σ(α(t)).
#[derive(Clone)]
pub enum Conductivity {
    /// Closed forms for σ(α(t)) and ∫₀ᵗ σ(α(s)) ds.
    Exact { sigma: TimeFn, integral: TimeFn },
    /// Samples on a time grid. Σ is the trapezoid prefix sum, linearly
    /// interpolated between nodes.
    Tabulated {
        times: Vec<f64>,
        sigma: Vec<f64>,
        prefix: Vec<f64>,
        rate: Vec<f64>,
    },
}

impl std::fmt::Debug for Conductivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Conductivity::Exact { .. } => f.write_str("Exact"),
            Conductivity::Tabulated { times, .. } => {
                write!(f, "Tabulated({} nodes)", times.len())
            }
        }
    }
}

impl Conductivity {
    pub fn exact<S, I>(sigma: S, integral: I) -> Self
    where
        S: Fn(f64) -> f64 + Send + Sync + 'static,
        I: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Conductivity::Exact {
            sigma: Arc::new(sigma),
            integral: Arc::new(integral),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::exact(move |_| value, move |t| value * t)
    }

    /// Builds the prefix-sum table. `times` must start at 0 and increase
    /// strictly.
    pub fn tabulated(times: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != sigma.len() {
            return Err(Error::Config(
                "schedule needs at least two (t, sigma) samples of equal length".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::Config("schedule must start at t = 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("schedule times must increase strictly".into()));
        }
        let n = times.len();
        let mut prefix = vec![0.0; n];
        for i in 1..n {
            prefix[i] = prefix[i - 1] + 0.5 * (sigma[i] + sigma[i - 1]) * (times[i] - times[i - 1]);
        }
        // dΣ/dt of the table: centered quotients inside, samples at the ends.
        let mut rate = sigma.clone();
        for i in 1..n - 1 {
            rate[i] = (prefix[i + 1] - prefix[i - 1]) / (times[i + 1] - times[i - 1]);
        }
        Ok(Conductivity::Tabulated {
            times,
            sigma,
            prefix,
            rate,
        })
    }

    fn check_range(&self, t: f64) -> Result<()> {
        match self {
            Conductivity::Exact { .. } => {
                if t >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::OutOfRange { t, start: 0.0, end: f64::INFINITY })
                }
            }
            Conductivity::Tabulated { times, .. } => {
                let (start, end) = (times[0], times[times.len() - 1]);
                if t >= start && t <= end {
                    Ok(())
                } else {
                    Err(Error::OutOfRange { t, start, end })
                }
            }
        }
    }

    /// ∫₀ᵗ σ(α(s)) ds
    pub fn integral(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(match self {
            Conductivity::Exact { integral, .. } => integral(t),
            Conductivity::Tabulated { times, prefix, .. } => interpolate(times, prefix, t),
        })
    }

    /// σ(α(t))
    pub fn sigma(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(match self {
            Conductivity::Exact { sigma, .. } => sigma(t),
            Conductivity::Tabulated { times, sigma, .. } => interpolate(times, sigma, t),
        })
    }

    /// Time derivative of the stored integral. Equals σ(α(t)) for exact
    /// schedules and differs from it by O(dt²) for tables.
    pub fn integral_rate(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        Ok(match self {
            Conductivity::Exact { sigma, .. } => sigma(t),
            Conductivity::Tabulated { times, rate, .. } => interpolate(times, rate, t),
        })
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = match times.binary_search_by(|x| x.total_cmp(&t)) {
        Ok(i) => return values[i],
        Err(i) => i.clamp(1, times.len() - 1),
    };
    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    values[i - 1] + w * (values[i] - values[i - 1])
}

/// ρ_(X₀, t₀) for a given conductivity schedule.
#[derive(Debug, Clone)]
pub struct BackwardKernel {
    pub x0: [f64; 2],
    pub t0: f64,
    pub mu: f64,
    conductivity: Conductivity,
    sigma_t0: f64,
}

impl BackwardKernel {
    pub fn new(x0: [f64; 2], t0: f64, mu: f64, conductivity: Conductivity) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!("mu must be positive, got {mu}")));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::Config(format!("t0 must be positive, got {t0}")));
        }
        let sigma_t0 = mu * conductivity.integral(t0)?;
        Ok(BackwardKernel {
            x0,
            t0,
            mu,
            conductivity,
            sigma_t0,
        })
    }

    pub fn conductivity(&self) -> &Conductivity {
        &self.conductivity
    }

    /// Σ(t) = μ ∫₀ᵗ σ(α(s)) ds
    pub fn sigma_accum(&self, t: f64) -> Result<f64> {
        Ok(self.mu * self.conductivity.integral(t)?)
    }

    /// τ(t) = Σ(t₀) - Σ(t), with the domain checks of the kernel.
    pub fn tau(&self, t: f64) -> Result<f64> {
        if t >= self.t0 {
            return Err(Error::KernelDomain { t, t0: self.t0 });
        }
        let tau = self.sigma_t0 - self.sigma_accum(t)?;
        if tau < TAU_GUARD {
            return Err(Error::KernelDomain { t, t0: self.t0 });
        }
        Ok(tau)
    }

    pub fn rho(&self, x: [f64; 2], t: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        Ok(gaussian(self.offset(x), tau))
    }

    pub fn grad_rho(&self, x: [f64; 2], t: f64) -> Result<[f64; 2]> {
        let tau = self.tau(t)?;
        let d = self.offset(x);
        let s = -gaussian(d, tau) / (2.0 * tau);
        Ok([s * d[0], s * d[1]])
    }

    pub fn hess_rho(&self, x: [f64; 2], t: f64) -> Result<[[f64; 2]; 2]> {
        let tau = self.tau(t)?;
        let d = self.offset(x);
        let rho = gaussian(d, tau);
        let a = -rho / (2.0 * tau);
        let b = rho / (4.0 * tau * tau);
        let off = b * d[0] * d[1];
        Ok([[a + b * d[0] * d[0], off], [off, a + b * d[1] * d[1]]])
    }

    /// ∂ρ/∂t using the rate of the stored Σ.
    pub fn rho_t(&self, x: [f64; 2], t: f64) -> Result<f64> {
        let tau = self.tau(t)?;
        let d = self.offset(x);
        let rho = gaussian(d, tau);
        let k_rate = self.mu * self.conductivity.integral_rate(t)?;
        let r2 = d[0] * d[0] + d[1] * d[1];
        Ok(k_rate * rho / (2.0 * tau) - k_rate * r2 * rho / (4.0 * tau * tau))
    }

    /// |ρ_t + μσ (Dρ·a)²/ρ + μσ (I - a⊗a):D²ρ| with σ = σ(α(t)) from the
    /// schedule and `a` a unit vector.
    pub fn kernel_identity_residual(&self, x: [f64; 2], t: f64, a: [f64; 2]) -> Result<f64> {
        let norm = a[0].hypot(a[1]);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("direction must be a unit vector, |a| = {norm}")));
        }
        let rho = self.rho(x, t)?;
        let grad = self.grad_rho(x, t)?;
        let hess = self.hess_rho(x, t)?;
        let rate = self.mu * self.conductivity.sigma(t)?;
        let directional = grad[0] * a[0] + grad[1] * a[1];
        let mut contraction = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let proj = if i == j { 1.0 } else { 0.0 } - a[i] * a[j];
                contraction += proj * hess[i][j];
            }
        }
        let lhs = self.rho_t(x, t)? + rate * directional * directional / rho + rate * contraction;
        Ok(lhs.abs())
    }

    fn offset(&self, x: [f64; 2]) -> [f64; 2] {
        [x[0] - self.x0[0], x[1] - self.x0[1]]
    }
}

fn gaussian(d: [f64; 2], tau: f64) -> f64 {
    let r2 = d[0] * d[0] + d[1] * d[1];
    (4.0 * std::f64::consts::PI * tau).powf(-0.5) * (-r2 / (4.0 * tau)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};
    use std::f64::consts::PI;

    fn constant_kernel(mu: f64, value: f64) -> BackwardKernel {
        BackwardKernel::new([0.3, -0.2], 1.0, mu, Conductivity::constant(value)).unwrap()
    }

    #[test]
    fn sigma_accum_examples() {
        let k = BackwardKernel::new([0.0, 0.0], 1.0, 2.0, Conductivity::constant(1.0)).unwrap();
        assert!((k.sigma_accum(0.3).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(k.sigma_accum(0.0).unwrap(), 0.0);

        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let tab = Conductivity::tabulated(times, vec![2.0; 11]).unwrap();
        let k = BackwardKernel::new([0.0, 0.0], 1.0, 1.0, tab).unwrap();
        assert!((k.sigma_accum(0.35).unwrap() - 0.7).abs() < 1e-14);
        assert!(matches!(k.sigma_accum(1.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn trapezoid_schedule_converges_to_closed_form() {
        // σ(α(t)) = 1 + ½c²e^{-2γt} for α = c e^{-γt}.
        let (c, gamma): (f64, f64) = (1.5, 1.0);
        let exact = 1.0 + c * c / (4.0 * gamma) * (1.0 - (-2.0f64 * gamma).exp());
        let err = |n: usize| {
            let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let sigma = times
                .iter()
                .map(|t| 1.0 + 0.5 * c * c * (-2.0 * gamma * t).exp())
                .collect();
            let k = BackwardKernel::new(
                [0.0, 0.0],
                1.0,
                1.0,
                Conductivity::tabulated(times, sigma).unwrap(),
            )
            .unwrap();
            (k.sigma_accum(1.0).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 < 1e-4);
        assert!(((e1 / e2).log2() - 2.0).abs() < 0.05);
    }

    #[test]
    fn rho_examples() {
        let k = constant_kernel(1.0, 1.0);
        let tau = k.tau(0.5).unwrap();
        assert!((k.rho(k.x0, 0.5).unwrap() - (4.0 * PI * tau).powf(-0.5)).abs() < 1e-15);
        assert_eq!(k.grad_rho(k.x0, 0.5).unwrap(), [0.0, 0.0]);

        // τ = 1/(4π) at t = 1 - 1/(4π).
        let t = 1.0 - 1.0 / (4.0 * PI);
        let x = [k.x0[0] + 1.0, k.x0[1]];
        let value = k.rho(x, t).unwrap();
        assert!((value - (-PI).exp()).abs() < 1e-12);
        assert!((value - 0.043213918).abs() < 1e-8);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let k = constant_kernel(1.5, 1.2);
        let h = 1e-5;
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let t = rng.gen_range(0.0..0.8);
            let grad = k.grad_rho(x, t).unwrap();
            let hess = k.hess_rho(x, t).unwrap();
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (k.rho(xp, t).unwrap() - k.rho(xm, t).unwrap()) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-6);
                let gp = k.grad_rho(xp, t).unwrap();
                let gm = k.grad_rho(xm, t).unwrap();
                for j in 0..2 {
                    let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd2 - hess[j][i]).abs() < 1e-6);
                }
            }
            assert_eq!(hess[0][1], hess[1][0]);
            let ft = (k.rho(x, t + h).unwrap() - k.rho(x, t - h).unwrap()) / (2.0 * h);
            assert!((ft - k.rho_t(x, t).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn standard_kernel_when_conductivity_is_time() {
        let k = BackwardKernel::new([0.0, 0.0], 2.0, 1.0, Conductivity::constant(1.0)).unwrap();
        for &(x, t) in &[([0.1, 0.4], 0.5), ([-1.0, 2.0], 1.9), ([0.0, 0.0], 0.0)] {
            let r2: f64 = x[0] * x[0] + x[1] * x[1];
            let s: f64 = 2.0 - t;
            let classic = (4.0 * PI * s).powf(-0.5) * (-r2 / (4.0 * s)).exp();
            assert!((k.rho(x, t).unwrap() - classic).abs() < 1e-15);
            assert!(k.kernel_identity_residual(x, t, [0.6, 0.8]).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn identity_residual_vanishes_for_exact_schedules() {
        let k = BackwardKernel::new(
            [0.5, 0.1],
            1.0,
            1.0,
            Conductivity::exact(|t| 1.0 + 0.5 * (-2.0 * t).exp(), |t| t + 0.25 * (1.0 - (-2.0 * t).exp())),
        )
        .unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let x = [rng.gen_range(-0.5..1.5), rng.gen_range(-1.0..1.0)];
            let t = rng.gen_range(0.0..0.9);
            let th: f64 = rng.gen_range(0.0..2.0 * PI);
            let r = k.kernel_identity_residual(x, t, [th.cos(), th.sin()]).unwrap();
            assert!(r <= 1e-10, "{r}");
        }
        // At the peak Dρ vanishes and only the projected Hessian term remains.
        assert!(k.kernel_identity_residual(k.x0, 0.3, [0.0, 1.0]).unwrap() <= 1e-10);
    }

    #[test]
    fn tabulated_identity_residual_is_second_order() {
        let schedule = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
            let sigma = times.iter().map(|t| 1.0 + 0.5 * (-2.0 * t).exp()).collect();
            BackwardKernel::new([0.5, 0.0], 0.9, 1.0, Conductivity::tabulated(times, sigma).unwrap())
                .unwrap()
        };
        let points = [([0.7, 0.1], 0.3137), ([0.2, -0.3], 0.55), ([0.5, 0.4], 0.101)];
        for (x, t) in points {
            let r1 = schedule(0.01).kernel_identity_residual(x, t, [1.0, 0.0]).unwrap();
            let r2 = schedule(0.005).kernel_identity_residual(x, t, [1.0, 0.0]).unwrap();
            let ratio = r1 / r2;
            assert!((3.0..5.0).contains(&ratio), "ratio {ratio} at {x:?}, {t}");
        }
    }

    #[test]
    fn domain_errors() {
        let k = constant_kernel(1.0, 1.0);
        assert!(matches!(k.rho([0.0, 0.0], 1.0), Err(Error::KernelDomain { .. })));
        assert!(matches!(k.rho([0.0, 0.0], 1.5), Err(Error::KernelDomain { .. })));
        assert!(k.rho([0.0, 0.0], 1.0 - 1e-14).is_err());
        assert!(k.kernel_identity_residual([0.0, 0.0], 0.5, [1.0, 1.0]).is_err());
    }

    #[test]
    fn rho_positive_and_sigma_increasing() {
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.02).collect();
        let sigma: Vec<f64> = times.iter().map(|t| 1.0 + (3.0 * t).sin().abs()).collect();
        let k = BackwardKernel::new([0.0, 0.0], 1.0, 1.0, Conductivity::tabulated(times.clone(), sigma).unwrap())
            .unwrap();
        let acc: Vec<f64> = times.iter().map(|&t| k.sigma_accum(t).unwrap()).collect();
        assert!(acc.windows(2).all(|w| w[1] > w[0]));
        for &t in &times[..times.len() - 1] {
            assert!(k.rho([0.3, 0.1], t).unwrap() > 0.0);
        }
    }
}
