//! Gamma function for real and complex arguments.
//!
//! Lanczos approximation with g = 7 and nine coefficients, combined with the
//! reflection formula `Γ(z)Γ(1-z) = π / sin(πz)` on the left half-plane.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln(2π)/2
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// sin(πx) with exact argument reduction, so integer arguments give exact zeros.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn sin_pi_complex(z: Complex64) -> Complex64 {
    let n = z.re.round();
    let s = (Complex64::new(z.re - n, z.im) * PI).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

fn lanczos_sum_complex(z: Complex64) -> Complex64 {
    let mut a = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += *c / (z + i as f64);
    }
    a
}

/// Complex Gamma function. Fails at the poles `0, -1, -2, ...`.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return real_gamma(z.re).map(|g| Complex64::new(g, 0.0));
    }
    Ok(gamma_complex_unchecked(z))
}

fn gamma_complex_unchecked(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let one_minus = Complex64::new(1.0 - z.re, -z.im);
        return PI / (sin_pi_complex(z) * gamma_complex_unchecked(one_minus));
    }
    let x = z - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let log_part = (x + 0.5) * t.ln() - t + HALF_LN_2PI;
    log_part.exp() * lanczos_sum_complex(x)
}

/// Real Gamma function. Fails at the poles `0, -1, -2, ...`.
pub fn real_gamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    Ok(real_gamma_unchecked(x))
}

fn real_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / (sin_pi(x) * real_gamma_unchecked(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    // Split the power to avoid overflow of t^(y+0.5) before the exp(-t) factor applies.
    let half = t.powf(0.5 * (y + 0.5));
    (2.0 * PI).sqrt() * half * ((-t).exp() * half) * lanczos_sum(y)
}

/// 1/Γ(x), equal to zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else if x > 171.0 {
        (-ln_gamma(x)).exp()
    } else {
        1.0 / real_gamma_unchecked(x)
    }
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Γ(x) = Γ(x+1)/x keeps the Lanczos sum on its accurate branch.
        return ln_gamma(x + 1.0) - x.ln();
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    HALF_LN_2PI + (y + 0.5) * t.ln() - t + lanczos_sum(y).ln()
}

/// Complex reciprocal gamma, zero at the poles.
pub fn rgamma_complex(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return Complex64::new(rgamma(z.re), 0.0);
    }
    1.0 / gamma_complex_unchecked(z)
}
