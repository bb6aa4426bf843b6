//! Special functions: complex Gamma, two-parameter Mittag-Leffler, the
//! Mittag-Leffler convolution kernel and its asymptotic tail bound.

mod dd;
mod gamma;
mod mittag_leffler;

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fraccalc::FracOrder;

pub use gamma::{gamma, ln_gamma, real_gamma, rgamma, rgamma_complex};
pub use mittag_leffler::{
    mittag_leffler, mittag_leffler_detailed, MLParams, MlValue, Regime, ASYMPTOTIC_RADIUS,
    SERIES_RADIUS,
};

/// Constants of the Mittag-Leffler kernel bounds: the tail coefficient `m`
/// valid beyond `t1`, and the uniform L1 bound `c` of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub m: f64,
    pub t1: f64,
    pub c: f64,
}

/// Tail bound `|w^{α-1} E_{α,α}(λ w^α)| <= m / w^{α+1}` for `w > t1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub m: f64,
    pub t1: f64,
    /// Number of doublings applied to the seeded coefficient.
    pub enlargements: u32,
}

/// Principal argument in (-π, π].
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a == -PI {
        PI
    } else {
        a
    }
}

/// Fails with [`Error::Sector`] unless `|arg λ| > απ/2`.
pub fn check_sector(alpha: f64, lambda: Complex64) -> Result<()> {
    let threshold = 0.5 * alpha * PI;
    let arg = principal_arg(lambda).abs();
    if lambda.norm() == 0.0 || arg <= threshold {
        return Err(Error::Sector { arg, threshold });
    }
    Ok(())
}

/// `((t^ρ - s^ρ)/ρ)^{α-1} E_{α,α}(λ ((t^ρ - s^ρ)/ρ)^α) s^{ρ-1}`.
pub fn ml_kernel(order: &FracOrder, lambda: Complex64, t: f64, s: f64) -> Result<Complex64> {
    if !(s >= order.t0 && s < t) {
        return Err(Error::Domain(format!(
            "kernel needs t0 <= s < t, got t0 = {}, s = {s}, t = {t}",
            order.t0
        )));
    }
    let rho = order.rho;
    let alpha = order.alpha;
    let w = (t.powf(rho) - s.powf(rho)) / rho;
    let ml = mittag_leffler(MLParams::new(alpha, alpha)?, lambda * w.powf(alpha))?;
    Ok(ml * w.powf(alpha - 1.0) * s.powf(rho - 1.0))
}

/// `|w^{α-1} E_{α,α}(λ w^α)|`, the stationary kernel in the transformed variable.
pub fn stationary_kernel_abs(alpha: f64, lambda: Complex64, w: f64) -> Result<f64> {
    let ml = mittag_leffler(MLParams::new(alpha, alpha)?, lambda * w.powf(alpha))?;
    Ok(ml.norm() * w.powf(alpha - 1.0))
}

const TAIL_SAFETY: f64 = 1.25;
const TAIL_SAMPLES: usize = 400;
const TAIL_SPAN: f64 = 1e4;

/// Tail constants of the Mittag-Leffler kernel for a stable `λ`.
///
/// `t1` is where `|λ| t1^α` reaches the asymptotic radius. `m` starts from the
/// leading asymptotic coefficient `|λ|^{-2}/|Γ(-α)|` times a safety factor and
/// is doubled until the bound holds on a geometric sample of `[t1, 10^4 t1]`.
pub fn tail_constants(alpha: f64, lambda: Complex64) -> Result<TailBound> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Order(format!("alpha must lie in (0,1), got {alpha}")));
    }
    check_sector(alpha, lambda)?;
    let t1 = (ASYMPTOTIC_RADIUS / lambda.norm()).powf(1.0 / alpha);
    let seed = lambda.norm().powi(-2) * rgamma(-alpha).abs() * TAIL_SAFETY;
    let samples = tail_sample_points(t1);
    // |E_{α,α}(λw^α)| w^{2α} must stay below m on every sample.
    let mut needed: f64 = 0.0;
    for &w in &samples {
        let scaled = stationary_kernel_abs(alpha, lambda, w)? * w.powf(alpha + 1.0);
        needed = needed.max(scaled);
    }
    let mut m = seed;
    let mut enlargements = 0;
    while m < needed {
        m *= 2.0;
        enlargements += 1;
    }
    Ok(TailBound { m, t1, enlargements })
}

/// Geometric sample of `[t1, 10^4 t1]` used to validate a tail bound.
pub fn tail_sample_points(t1: f64) -> Vec<f64> {
    let ratio = TAIL_SPAN.powf(1.0 / (TAIL_SAMPLES - 1) as f64);
    let mut w = t1;
    (0..TAIL_SAMPLES)
        .map(|_| {
            let cur = w;
            w *= ratio;
            cur
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_zero_lambda_reduces_to_power() {
        let order = FracOrder::new(0.5, 1.0, 1.0).unwrap();
        let k = ml_kernel(&order, Complex64::new(0.0, 0.0), 2.0, 1.0).unwrap();
        assert!((k.re - 0.564_189_583_547_756_3).abs() < 1e-13);

        let order = FracOrder::new(0.9, 1.2, 1.0).unwrap();
        let t: f64 = 2.0;
        let w: f64 = (t.powf(1.2) - 1.0) / 1.2;
        let want = w.powf(-0.1) * rgamma(0.9);
        let k = ml_kernel(&order, Complex64::new(0.0, 0.0), t, 1.0).unwrap();
        assert!((k.re - want).abs() < 1e-14 * want);
    }

    #[test]
    fn kernel_domain_errors() {
        let order = FracOrder::new(0.5, 1.0, 1.0).unwrap();
        let lam = Complex64::new(-1.0, 0.0);
        assert!(ml_kernel(&order, lam, 2.0, 2.0).is_err());
        assert!(ml_kernel(&order, lam, 2.0, 0.5).is_err());
    }

    #[test]
    fn rho_one_kernel_is_classical() {
        let order = FracOrder::new(0.7, 1.0, 1.0).unwrap();
        let lam = Complex64::new(-2.0, 0.3);
        let (t, s) = (3.5, 1.25);
        let k = ml_kernel(&order, lam, t, s).unwrap();
        let w: f64 = t - s;
        let classical = mittag_leffler(MLParams::new(0.7, 0.7).unwrap(), lam * w.powf(0.7)).unwrap()
            * w.powf(-0.3);
        assert_eq!(k, classical);
    }

    #[test]
    fn sector_violation_is_an_error() {
        assert!(matches!(tail_constants(0.5, Complex64::new(1.0, 0.0)), Err(Error::Sector { .. })));
        assert!(check_sector(0.9, Complex64::new(0.0, 1.0)).is_ok());
        assert!(check_sector(1.0 - 1e-12, Complex64::new(0.0, 1.0)).is_ok());
    }

    #[test]
    fn principal_arg_branch() {
        assert_eq!(principal_arg(Complex64::new(-1.0, 0.0)), PI);
        assert_eq!(principal_arg(Complex64::new(-1.0, -0.0)), PI);
    }
}
