//! Grain boundary energy densities.
//!
//! An isotropic density depends on the misorientation only, σ(α). The
//! anisotropic form σ(θ, α) additionally depends on the polar angle θ of the
//! unit normal and is used by the front-tracking solver.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type AngularFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Built-in density families.
#[derive(Clone)]
pub enum SigmaKind {
    /// σ(α) = 1 + α²/2
    QuadraticShifted,
    /// σ(α) = α²/2
    Quadratic,
    /// User supplied value and derivative.
    Custom { value: ScalarFn, deriv: ScalarFn },
}

impl fmt::Debug for SigmaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaKind::QuadraticShifted => f.write_str("QuadraticShifted"),
            SigmaKind::Quadratic => f.write_str("Quadratic"),
            SigmaKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// Isotropic energy density σ(α) together with the declared assumption flags.
///
/// `satisfies_a1` declares σ(α) ≥ `c_lower` > 0 for all α, `satisfies_a2`
/// declares α·σ'(α) ≥ 0. The flags are part of the model; use
/// [`SigmaModel::validate`] to spot-check them on a sample grid.
#[derive(Debug, Clone)]
pub struct SigmaModel {
    kind: SigmaKind,
    c_lower: f64,
    satisfies_a1: bool,
    satisfies_a2: bool,
}

impl SigmaModel {
    pub fn quadratic_shifted() -> Self {
        SigmaModel {
            kind: SigmaKind::QuadraticShifted,
            c_lower: 1.0,
            satisfies_a1: true,
            satisfies_a2: true,
        }
    }

    pub fn quadratic() -> Self {
        SigmaModel {
            kind: SigmaKind::Quadratic,
            c_lower: 0.0,
            satisfies_a1: false,
            satisfies_a2: true,
        }
    }

    /// Custom density from a value/derivative pair.
    ///
    /// `c_lower` is only meaningful when `satisfies_a1` is set and must then be
    /// strictly positive.
    pub fn custom<V, D>(
        value: V,
        deriv: D,
        c_lower: f64,
        satisfies_a1: bool,
        satisfies_a2: bool,
    ) -> Result<Self>
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if satisfies_a1 && !(c_lower > 0.0 && c_lower.is_finite()) {
            return Err(Error::Config(format!(
                "a model flagged (A1) needs a positive finite lower bound, got {c_lower}"
            )));
        }
        Ok(SigmaModel {
            kind: SigmaKind::Custom {
                value: Arc::new(value),
                deriv: Arc::new(deriv),
            },
            c_lower: if satisfies_a1 { c_lower } else { 0.0 },
            satisfies_a1,
            satisfies_a2,
        })
    }

    /// Constant density σ ≡ c. Satisfies (A2) always and (A1) when c > 0.
    pub fn constant(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("constant density must be >= 0, got {c}")));
        }
        Self::custom(move |_| c, |_| 0.0, c, c > 0.0, true)
    }

    /// Looks a model up by its configuration name.
    ///
    /// Recognised names are `quadratic_shifted`, `quadratic` and `constant`
    /// (the latter takes the value as its single parameter).
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        match (name, params) {
            ("quadratic_shifted", []) => Ok(Self::quadratic_shifted()),
            ("quadratic", []) => Ok(Self::quadratic()),
            ("constant", [c]) => Self::constant(*c),
            ("constant", _) => Err(Error::Config(
                "sigma kind `constant` takes exactly one parameter".into(),
            )),
            ("quadratic_shifted" | "quadratic", _) => Err(Error::Config(format!(
                "sigma kind `{name}` takes no parameters"
            ))),
            ("custom", _) => Err(Error::Config(
                "sigma kind `custom` has no callable bound; construct it through the library".into(),
            )),
            _ => Err(Error::Config(format!("unknown sigma kind `{name}`"))),
        }
    }

    pub fn kind(&self) -> &SigmaKind {
        &self.kind
    }

    pub fn c_lower(&self) -> f64 {
        self.c_lower
    }

    pub fn satisfies_a1(&self) -> bool {
        self.satisfies_a1
    }

    pub fn satisfies_a2(&self) -> bool {
        self.satisfies_a2
    }

    /// σ(α)
    pub fn eval(&self, alpha: f64) -> f64 {
        match &self.kind {
            SigmaKind::QuadraticShifted => 1.0 + 0.5 * alpha * alpha,
            SigmaKind::Quadratic => 0.5 * alpha * alpha,
            SigmaKind::Custom { value, .. } => value(alpha),
        }
    }

    /// σ'(α)
    pub fn deriv(&self, alpha: f64) -> f64 {
        match &self.kind {
            SigmaKind::QuadraticShifted | SigmaKind::Quadratic => alpha,
            SigmaKind::Custom { deriv, .. } => deriv(alpha),
        }
    }

    /// Spot-checks the declared (A1)/(A2) flags on the given α samples.
    pub fn validate(&self, samples: impl IntoIterator<Item = f64>) -> Result<()> {
        for alpha in samples {
            let s = self.eval(alpha);
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Config(format!("sigma({alpha}) = {s} is not a valid density")));
            }
            if self.satisfies_a1 && s < self.c_lower {
                return Err(Error::Config(format!(
                    "(A1) violated: sigma({alpha}) = {s} < {}",
                    self.c_lower
                )));
            }
            if self.satisfies_a2 && alpha * self.deriv(alpha) < -1e-12 {
                return Err(Error::Config(format!(
                    "(A2) violated at alpha = {alpha}: alpha * sigma'(alpha) < 0"
                )));
            }
        }
        Ok(())
    }

    /// [`validate`](Self::validate) on `count` uniform samples of [-10, 10].
    pub fn validate_default(&self) -> Result<()> {
        let count = 1001;
        self.validate((0..count).map(|i| -10.0 + 20.0 * i as f64 / (count - 1) as f64))
    }
}

/// Anisotropic density σ(θ, α) with its θ-derivatives and α-derivative.
#[derive(Clone)]
pub struct AnisotropicSigma {
    eval: AngularFn,
    d_theta: AngularFn,
    d_theta2: AngularFn,
    d_alpha: AngularFn,
}

impl fmt::Debug for AnisotropicSigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnisotropicSigma").finish_non_exhaustive()
    }
}

impl AnisotropicSigma {
    pub fn new<E, T, TT, A>(eval: E, d_theta: T, d_theta2: TT, d_alpha: A) -> Self
    where
        E: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        T: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        TT: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        A: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        AnisotropicSigma {
            eval: Arc::new(eval),
            d_theta: Arc::new(d_theta),
            d_theta2: Arc::new(d_theta2),
            d_alpha: Arc::new(d_alpha),
        }
    }

    /// Lifts an isotropic model; all θ-derivatives vanish.
    pub fn isotropic(model: SigmaModel) -> Self {
        let value = model.clone();
        Self::new(
            move |_, a| value.eval(a),
            |_, _| 0.0,
            |_, _| 0.0,
            move |_, a| model.deriv(a),
        )
    }

    /// σ(θ, α) = (base + amplitude·cos(fold·θ))·s(α) for an isotropic factor s.
    pub fn modulated(model: SigmaModel, base: f64, amplitude: f64, fold: f64) -> Self {
        let (m0, m1, m2, m3) = (model.clone(), model.clone(), model.clone(), model);
        Self::new(
            move |th, a| (base + amplitude * (fold * th).cos()) * m0.eval(a),
            move |th, a| -amplitude * fold * (fold * th).sin() * m1.eval(a),
            move |th, a| -amplitude * fold * fold * (fold * th).cos() * m2.eval(a),
            move |th, a| (base + amplitude * (fold * th).cos()) * m3.deriv(a),
        )
    }

    /// σ(θ) = base + amplitude·cos(fold·θ), independent of α.
    pub fn cosine(base: f64, amplitude: f64, fold: f64) -> Self {
        Self::new(
            move |th, _| base + amplitude * (fold * th).cos(),
            move |th, _| -amplitude * fold * (fold * th).sin(),
            move |th, _| -amplitude * fold * fold * (fold * th).cos(),
            |_, _| 0.0,
        )
    }

    pub fn eval(&self, theta: f64, alpha: f64) -> f64 {
        (self.eval)(theta, alpha)
    }

    pub fn d_theta(&self, theta: f64, alpha: f64) -> f64 {
        (self.d_theta)(theta, alpha)
    }

    pub fn d_theta2(&self, theta: f64, alpha: f64) -> f64 {
        (self.d_theta2)(theta, alpha)
    }

    pub fn d_alpha(&self, theta: f64, alpha: f64) -> f64 {
        (self.d_alpha)(theta, alpha)
    }

    /// Interfacial stiffness σ_θθ + σ.
    pub fn stiffness(&self, theta: f64, alpha: f64) -> f64 {
        self.d_theta2(theta, alpha) + self.eval(theta, alpha)
    }

    /// Smallest stiffness over `samples` equally spaced normal angles.
    pub fn min_stiffness(&self, alpha: f64, samples: usize) -> f64 {
        (0..samples)
            .map(|i| self.stiffness(TAU * i as f64 / samples as f64, alpha))
            .fold(f64::INFINITY, f64::min)
    }
}
