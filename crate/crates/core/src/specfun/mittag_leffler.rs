//! Two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk + β)`.
//!
//! Evaluation picks among several regimes and returns the first one whose
//! own error estimate meets its tolerance:
//!
//! * compensated power series in `f64` for `|z| <= 8`;
//! * for `0 < α < 1`, the real-line integral representation
//!   `E = ∫_0^∞ K(χ) dχ (+ exponential term when |arg z| < απ)`,
//!   which stays accurate where the series suffers cancellation;
//! * for integer `α`, the power series in double-double arithmetic, where the
//!   gamma ratios reduce to exact rational recurrences;
//! * the algebraic asymptotic expansion plus exponential terms for `|z| >= 15`.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use super::dd::{CDd, Dd};
use super::gamma::{ln_gamma, rgamma};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, Node, Tolerance};

/// Radius below which the `f64` power series is attempted first.
pub const SERIES_RADIUS: f64 = 8.0;
/// Radius at which the asymptotic expansion becomes available.
pub const ASYMPTOTIC_RADIUS: f64 = 15.0;

const SERIES_TOL: f64 = 1e-11;
const ASYMPTOTIC_TOL: f64 = 1e-6;
const LAST_RESORT_TOL: f64 = 1e-10;
const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MLParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MLParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("Mittag-Leffler alpha must be > 0, got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("Mittag-Leffler beta must be > 0, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Series,
    IntegralRepresentation,
    ExtendedSeries,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MlValue {
    pub value: Complex64,
    /// Estimated relative error of `value`.
    pub error: f64,
    pub regime: Regime,
}

/// `E_{α,β}(z)`.
pub fn mittag_leffler(p: MLParams, z: Complex64) -> Result<Complex64> {
    mittag_leffler_detailed(p, z).map(|v| v.value)
}

/// `E_{α,β}(z)` together with the achieved error estimate and the regime used.
pub fn mittag_leffler_detailed(p: MLParams, z: Complex64) -> Result<MlValue> {
    let MLParams { alpha, beta } = p;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite Mittag-Leffler argument {z}")));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(MlValue {
            value: Complex64::new(rgamma(beta), 0.0),
            error: EPS,
            regime: Regime::Series,
        });
    }
    let r = z.norm();
    let mut best: Option<MlValue> = None;
    let mut consider = |cand: Option<MlValue>, tol: f64| -> Option<MlValue> {
        let cand = cand?;
        if cand.error <= tol {
            return Some(cand);
        }
        if best.is_none_or(|b| cand.error < b.error) {
            best = Some(cand);
        }
        None
    };

    if r <= SERIES_RADIUS {
        if let Some(v) = consider(Some(series(alpha, beta, z)), SERIES_TOL) {
            return Ok(v);
        }
    }
    if alpha < 1.0 {
        if let Some(v) = consider(integral_representation(alpha, beta, z), SERIES_TOL) {
            return Ok(v);
        }
    }
    if is_small_integer(alpha) && r <= 60.0 {
        if let Some(v) = consider(Some(extended_series(alpha, beta, z)), SERIES_TOL) {
            return Ok(v);
        }
    }
    if r >= ASYMPTOTIC_RADIUS && alpha < 2.0 {
        if let Some(v) = consider(Some(asymptotic(alpha, beta, z)), ASYMPTOTIC_TOL) {
            return Ok(v);
        }
    }
    if r > SERIES_RADIUS {
        if let Some(v) = consider(Some(series(alpha, beta, z)), LAST_RESORT_TOL) {
            return Ok(v);
        }
    }
    let achieved = best.map_or(f64::INFINITY, |b| b.error);
    Err(Error::NonConvergence { achieved })
}

fn is_small_integer(alpha: f64) -> bool {
    alpha == alpha.round() && (1.0..=4.0).contains(&alpha)
}

#[derive(Default)]
struct Neumaier {
    sum: Complex64,
    comp: Complex64,
}

impl Neumaier {
    fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier_step(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier_step(self.sum.im, x.im, &mut self.comp.im);
    }

    fn total(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn neumaier_step(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

/// Compensated power series. The error estimate accounts for rounding in
/// each term (amplified by cancellation) and for truncation.
fn series(alpha: f64, beta: f64, z: Complex64) -> MlValue {
    let r = z.norm();
    let ln_z = z.ln();
    let mut acc = Neumaier::default();
    let mut err_abs = 0.0;
    let mut zpow = Complex64::new(1.0, 0.0);
    let mut direct = true;
    let mut last = f64::INFINITY;
    let max_terms = 20_000;
    let mut converged = false;
    for k in 0..max_terms {
        let arg = alpha * k as f64 + beta;
        let (term, term_err) = if direct && arg <= 170.0 && zpow.norm() < 1e290 {
            let t = zpow * rgamma(arg);
            zpow *= z;
            (t, EPS * (4.0 + k as f64))
        } else {
            direct = false;
            let log_mag = k as f64 * ln_z - ln_gamma(arg);
            let t = log_mag.exp();
            (t, EPS * (8.0 + (k as f64 * ln_z).norm() + ln_gamma(arg).abs()))
        };
        let mag = term.norm();
        acc.add(term);
        err_abs += mag * term_err;
        last = mag;
        let past_peak = arg.powf(alpha) > 2.0 * r;
        if past_peak && k > 2 && mag <= 1e-17 * acc.total().norm() {
            converged = true;
            break;
        }
        if past_peak && mag == 0.0 {
            converged = true;
            break;
        }
    }
    let value = acc.total();
    let scale = value.norm();
    let error = if !converged || scale == 0.0 {
        f64::INFINITY
    } else {
        (err_abs + last) / scale
    };
    MlValue {
        value,
        error,
        regime: Regime::Series,
    }
}

/// Power series in double-double arithmetic for integer `α`, where
/// `Γ(kα+β)/Γ((k-1)α+β)` is a product of `α` linear factors.
fn extended_series(alpha: f64, beta: f64, z: Complex64) -> MlValue {
    let m = alpha as usize;
    let r = z.norm();
    let zz = CDd::new(z.re, z.im);
    let mut inner = CDd::new(1.0, 0.0);
    let mut sum = CDd::new(1.0, 0.0);
    let mut abs_sum = 1.0;
    let mut converged = false;
    let mut last = 1.0;
    for k in 1..50_000usize {
        let base = (k - 1) as f64 * alpha + beta;
        let mut denom = Dd::from_f64(1.0);
        for j in 0..m {
            denom = denom * Dd::from_f64(base + j as f64);
        }
        inner = inner.mul(zz).scale_div(denom);
        sum = sum.add(inner);
        let mag = inner.norm_f64();
        abs_sum += mag;
        last = mag;
        let past_peak = (k as f64 * alpha + beta).powf(alpha) > 2.0 * r;
        if past_peak && mag <= 1e-34 * sum.norm_f64().max(1e-300) {
            converged = true;
            break;
        }
    }
    let scale_factor = rgamma(beta);
    let inner_sum = Complex64::new(sum.re.to_f64(), sum.im.to_f64());
    let value = inner_sum * scale_factor;
    let rel_inner = if inner_sum.norm() == 0.0 {
        f64::INFINITY
    } else {
        (1e-31 * abs_sum + last) / inner_sum.norm()
    };
    let error = if converged { rel_inner + 4.0 * EPS } else { f64::INFINITY };
    MlValue {
        value,
        error,
        regime: Regime::ExtendedSeries,
    }
}

/// Integral representation valid for `0 < α < 1`, `β < 1 + α`. Larger `β`
/// is reduced with `E_{α,β}(z) = (E_{α,β-α}(z) - 1/Γ(β-α)) / z`.
fn integral_representation(alpha: f64, beta: f64, z: Complex64) -> Option<MlValue> {
    if beta >= 1.0 + alpha {
        let inner = integral_representation(alpha, beta - alpha, z)?;
        let shifted = inner.value - rgamma(beta - alpha);
        let value = shifted / z;
        let abs_err = inner.error * inner.value.norm() + EPS * rgamma(beta - alpha).abs();
        let error = abs_err / shifted.norm().max(f64::MIN_POSITIVE) + 2.0 * EPS;
        return Some(MlValue {
            value,
            error,
            regime: Regime::IntegralRepresentation,
        });
    }
    let phi = z.arg().abs();
    let ray = alpha * PI;
    // The kernel has a pole on the integration path when |arg z| = απ.
    if (phi - ray).abs() < 1e-6 {
        return None;
    }
    let p = (1.0 - beta) / alpha;
    let s1 = (PI * (1.0 - beta)).sin();
    let s2 = (PI * (1.0 - beta + alpha)).sin();
    let c = (PI * alpha).cos();
    let inv_alpha = 1.0 / alpha;
    let pref = 1.0 / (alpha * PI);
    let kernel = |chi: f64| -> Complex64 {
        let num = Complex64::new(chi * s1, 0.0) - z * s2;
        let den = Complex64::new(chi * chi, 0.0) - z * (2.0 * chi * c) + z * z;
        let weight = pref * chi.powf(p) * (-chi.powf(inv_alpha)).exp();
        num / den * weight
    };
    // exp(-chi^{1/alpha}) < 1e-35 beyond this point.
    let chi_max = 80f64.powf(alpha);
    let r = z.norm();
    let mut breaks = vec![0.0];
    for b in [0.5 * r, r, 2.0 * r] {
        if b > 0.0 && b < chi_max {
            breaks.push(b);
        }
    }
    breaks.push(chi_max);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();

    let mut total = Complex64::new(0.0, 0.0);
    let mut abs_total = 0.0;
    let mut quad_err = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let res = adaptive(
            |n: Node| {
                let chi = if a == 0.0 { n.from_left } else { n.x };
                kernel(chi)
            },
            a,
            b,
            Tolerance::new(1e-15, 1e-300),
            12,
        );
        if !res.converged {
            return None;
        }
        let abs_piece = adaptive(
            |n: Node| {
                let chi = if a == 0.0 { n.from_left } else { n.x };
                Complex64::new(kernel(chi).norm(), 0.0)
            },
            a,
            b,
            Tolerance::new(1e-6, 1e-300),
            4,
        );
        total += res.value;
        abs_total += abs_piece.value.re;
        quad_err += res.error;
    }
    let mut value = total;
    let mut scale_abs = abs_total;
    if phi < ray {
        let root = z.powf(inv_alpha);
        let exp_term = z.powf(p) * root.exp() * inv_alpha;
        value += exp_term;
        scale_abs += exp_term.norm() * (1.0 + root.norm());
    }
    let mag = value.norm();
    if mag == 0.0 || !mag.is_finite() {
        return None;
    }
    let error = (quad_err + 64.0 * EPS * scale_abs) / mag;
    Some(MlValue {
        value,
        error,
        regime: Regime::IntegralRepresentation,
    })
}

/// Asymptotic expansion for `0 < α < 2`:
/// `E ≈ (1/α) Σ_m ζ_m^{1-β} e^{ζ_m} - Σ_k z^{-k}/Γ(β-αk)`, where `ζ_m` runs
/// over the roots `z^{1/α} e^{2πim/α}` with `|arg z + 2πm| < απ`.
fn asymptotic(alpha: f64, beta: f64, z: Complex64) -> MlValue {
    let arg = z.arg();
    let ln_r = z.norm().ln();
    let mut value = Complex64::new(0.0, 0.0);
    for m in -1i32..=1 {
        let theta = arg + 2.0 * PI * m as f64;
        if theta.abs() < alpha * PI {
            let zeta = Complex64::from_polar((ln_r / alpha).exp(), theta / alpha);
            let ln_zeta = Complex64::new(ln_r / alpha, theta / alpha);
            value += ((1.0 - beta) * ln_zeta + zeta).exp() / alpha;
        }
    }
    let zinv = 1.0 / z;
    let mut zpow = Complex64::new(1.0, 0.0);
    let mut prev_mag = f64::INFINITY;
    let mut tail = f64::INFINITY;
    let mut algebraic = Complex64::new(0.0, 0.0);
    for k in 1..400 {
        zpow *= zinv;
        let x = beta - alpha * k as f64;
        let term = -zpow * rgamma(x);
        algebraic += term;
        // Terms killed by a pole of Γ say nothing about convergence.
        if x <= 0.5 && (x - x.round()).abs() < 1e-6 {
            continue;
        }
        let mag = term.norm();
        if mag > prev_mag {
            algebraic -= term;
            tail = prev_mag;
            break;
        }
        prev_mag = mag;
        if mag <= 1e-17 * (value + algebraic).norm() {
            tail = mag;
            break;
        }
    }
    value += algebraic;
    let mag = value.norm();
    let error = if mag == 0.0 {
        f64::INFINITY
    } else {
        tail / mag + 1e3 * EPS
    };
    MlValue {
        value,
        error,
        regime: Regime::Asymptotic,
    }
}
