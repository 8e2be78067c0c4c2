//! Cyclic tridiagonal solver (Thomas algorithm with a Sherman–Morrison
//! correction for the two corner entries).

use crate::error::{Error, Result};

/// Pivots smaller than this in magnitude are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Periodic tridiagonal matrix.
///
/// Row `i` reads `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1]` with
/// indices taken mod n, so `lower[0]` is the top-right corner entry and
/// `upper[n-1]` the bottom-left one.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert!(
            lower.len() == diag.len() && upper.len() == diag.len(),
            "band lengths differ"
        );
        CyclicTridiagonal { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                self.lower[i] * x[(i + n - 1) % n]
                    + self.diag[i] * x[i]
                    + self.upper[i] * x[(i + 1) % n]
            })
            .collect()
    }

    /// Solves A x = rhs. Requires n ≥ 3.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert!(n >= 3, "cyclic solve needs at least 3 unknowns");
        assert_eq!(rhs.len(), n, "right-hand side length");

        let corner_top = self.lower[0];
        let corner_bottom = self.upper[n - 1];
        let gamma = -self.diag[0];
        if gamma.abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularSystem { row: 0, pivot: gamma });
        }

        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= corner_bottom * corner_top / gamma;

        let x = thomas(&self.lower, &diag, &self.upper, rhs)?;

        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = corner_bottom;
        let z = thomas(&self.lower, &diag, &self.upper, &u)?;

        let denom = 1.0 + z[0] + corner_top * z[n - 1] / gamma;
        if denom.abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularSystem { row: n - 1, pivot: denom });
        }
        let fact = (x[0] + corner_top * x[n - 1] / gamma) / denom;
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
    }
}

// Non-cyclic tridiagonal solve; lower[0] and upper[n-1] are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];

    let mut pivot = diag[0];
    if pivot.abs() < PIVOT_TOLERANCE {
        return Err(Error::SingularSystem { row: 0, pivot });
    }
    c_prime[0] = upper[0] / pivot;
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c_prime[i - 1];
        if pivot.abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularSystem { row: i, pivot });
        }
        c_prime[i] = upper[i] / pivot;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}
