//! Nonlinear remainders `f` with `f(0) = 0`.
//!
//! States are complex so the same object serves the physical system and its
//! complex modal form; real systems simply see zero imaginary parts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Nonlinearity: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[Complex64]) -> Result<Vec<Complex64>>;

    /// An analytic bound on the Lipschitz modulus over the ball of radius `r`,
    /// when one is known.
    fn lipschitz_bound(&self, _r: f64) -> Option<f64> {
        None
    }
}

fn check_dim(expected: usize, x: &[Complex64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension(format!(
            "nonlinearity expects {expected} components, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// `f ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct Zero(pub usize);

impl Nonlinearity for Zero {
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.0, x)?;
        Ok(vec![Complex64::new(0.0, 0.0); self.0])
    }

    fn lipschitz_bound(&self, _r: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// The Lorenz remainder `g(x) = (0, -x1 x3, x1 x2)`.
#[derive(Debug, Clone, Copy)]
pub struct LorenzG;

impl Nonlinearity for LorenzG {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(3, x)?;
        Ok(vec![Complex64::new(0.0, 0.0), -x[0] * x[2], x[0] * x[1]])
    }

    /// The Gram matrix of the two nonzero rows of `Dg(x)` has largest
    /// eigenvalue exactly `‖x‖²`, so `ℓ_g(r) = r` (the Frobenius norm only
    /// gives `√2 r`).
    fn lipschitz_bound(&self, r: f64) -> Option<f64> {
        Some(r)
    }
}

/// One monomial `coeff · Π x_j^{exponents[j]}` contributing to `component`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub component: usize,
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

/// Polynomial vector field without constant terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<PolyTerm>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<PolyTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("polynomial needs at least one coordinate".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.component >= dim {
                return Err(Error::Dimension(format!(
                    "term {i}: component {} out of range for dimension {dim}",
                    t.component
                )));
            }
            if t.exponents.len() != dim {
                return Err(Error::Dimension(format!(
                    "term {i}: {} exponents for dimension {dim}",
                    t.exponents.len()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Domain(format!("term {i}: non-finite coefficient")));
            }
            if t.exponents.iter().all(|&e| e == 0) && t.coeff != 0.0 {
                return Err(Error::Domain(format!(
                    "term {i} is constant; the nonlinearity must satisfy f(0) = 0"
                )));
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }
}

impl Nonlinearity for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.dim, x)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for t in &self.terms {
            let mono = t
                .exponents
                .iter()
                .zip(x)
                .fold(Complex64::new(t.coeff, 0.0), |acc, (&e, &xi)| acc * xi.powu(e));
            out[t.component] += mono;
        }
        Ok(out)
    }
}

/// Wraps a closure.
pub struct FnNonlinearity<F> {
    dim: usize,
    f: F,
}

impl<F> FnNonlinearity<F>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Nonlinearity for FnNonlinearity<F>
where
    F: Fn(&[Complex64]) -> Vec<Complex64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_dim(self.dim, x)?;
        let y = (self.f)(x);
        if y.len() != self.dim {
            return Err(Error::Evaluation(format!(
                "closure returned {} components, expected {}",
                y.len(),
                self.dim
            )));
        }
        if y.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Evaluation("closure returned a non-finite value".into()));
        }
        Ok(y)
    }
}
