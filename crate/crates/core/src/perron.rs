//! The Lyapunov-Perron operator of the modal system, the constants of its
//! contraction estimate and the resulting certificate.
//!
//! For `D y = Λ y + h(y)`, `y(t0) = x`, the operator is
//! `(F_x ξ)^i(w) = E_α(λ_i w^α) x^i + ∫_0^w (w-v)^{α-1} E_{α,α}(λ_i (w-v)^α) h^i(ξ(v)) dv`
//! in the transformed time `w`. Its fixed points are the solutions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

use crate::dynamics::{euclidean_norm, ml_kernel_weights, Trajectory};
use crate::error::{Error, Result};
use crate::fraccalc::{convolve_trapezoid, ConvolutionWeights, FracOrder, WGrid};
use crate::nonlinear::Nonlinearity;
use crate::quadrature::{adaptive, Node, Tolerance};
use crate::specfun::{check_sector, mittag_leffler, tail_constants, BoundConstants, MLParams, TailBound};
use crate::spectral::{modal_transform, sector_check, JordanHint, ModalSystem, Verdict};

/// Relative size of the neglected tail of the `C(α, λ)` integral.
pub const TAIL_FRACTION: f64 = 1e-6;
/// Lipschitz sampling needs at least this many pairs of each kind.
pub const MIN_LIPSCHITZ_SAMPLES: usize = 1000;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CEstimate {
    pub value: f64,
    /// `(1/α) ∫_0^{V^α} |E_{α,α}(λu)| du`
    pub quadrature: f64,
    /// `M / (α V^α)`
    pub tail: f64,
    /// Truncation point `V` in transformed time.
    pub horizon_w: f64,
    pub bound: TailBound,
}

/// `C(α,λ) = sup_W ∫_0^W |v^{α-1} E_{α,α}(λ v^α)| dv`, with the integral
/// truncated where the tail bound `M/(α V^α)` falls below
/// [`TAIL_FRACTION`] of the computed part.
///
/// Independent of `ρ` and `t0`: the substitution `u = s^ρ/ρ` removes both.
pub fn estimate_c_detailed(alpha: f64, lambda: Complex64, order: &FracOrder) -> Result<CEstimate> {
    order.require_caputo()?;
    if alpha != order.alpha {
        return Err(Error::Order(format!("alpha {alpha} differs from the order's {}", order.alpha)));
    }
    check_sector(alpha, lambda)?;
    let bound = tail_constants(alpha, lambda)?;
    let p = MLParams::new(alpha, alpha)?;
    let mut failure = None;
    let mut piece = |a: f64, b: f64| -> f64 {
        let r = adaptive(
            |n: Node| match mittag_leffler(p, lambda * n.x) {
                Ok(v) => Complex64::new(v.norm(), 0.0),
                Err(e) => {
                    failure.get_or_insert(e);
                    czero()
                }
            },
            a,
            b,
            Tolerance::new(1e-11, 1e-300),
            16,
        );
        r.value.re
    };
    // In u = v^α the integrand is smooth; grade the mesh geometrically from
    // the scale 1/|λ| outwards.
    let u_min_tail = bound.t1.powf(alpha);
    let mut hi = 1.0 / lambda.norm();
    let mut integral = piece(0.0, hi);
    loop {
        let tail = bound.m / (alpha * hi);
        if hi >= u_min_tail && tail <= TAIL_FRACTION * integral / alpha {
            break;
        }
        integral += piece(hi, 2.0 * hi);
        hi *= 2.0;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let quadrature = integral / alpha;
    let tail = bound.m / (alpha * hi);
    Ok(CEstimate {
        value: quadrature + tail,
        quadrature,
        tail,
        horizon_w: hi.powf(1.0 / alpha),
        bound,
    })
}

pub fn estimate_c(alpha: f64, lambda: Complex64, order: &FracOrder) -> Result<f64> {
    estimate_c_detailed(alpha, lambda, order).map(|c| c.value)
}

/// Tail coefficient, onset and `C(α,λ)` together.
pub fn bound_constants(alpha: f64, lambda: Complex64, order: &FracOrder) -> Result<BoundConstants> {
    let c = estimate_c_detailed(alpha, lambda, order)?;
    Ok(BoundConstants {
        m: c.bound.m,
        t1: c.bound.t1,
        c: c.value,
    })
}

const SUP_E_SAMPLES: usize = 10_000;

/// `sup_{W ≥ 0} |E_α(λ W^α)|`, sampled on a geometric grid of `|λ| W^α` from
/// `1e-8` to `1e4` (plus `W = 0`). Beyond that the algebraic decay of
/// `E_α` keeps the modulus below its last sampled values, which is checked.
pub fn estimate_sup_e(alpha: f64, lambda: Complex64, order: &FracOrder) -> Result<f64> {
    order.require_caputo()?;
    check_sector(alpha, lambda)?;
    let p = MLParams::new(alpha, 1.0)?;
    let dir = lambda / lambda.norm();
    let (lo, hi): (f64, f64) = (1e-8, 1e4);
    let ratio = (hi / lo).powf(1.0 / (SUP_E_SAMPLES - 1) as f64);
    let mut sup: f64 = 1.0; // E_α(0) = 1
    let mut s = lo;
    let mut last = 0.0;
    for _ in 0..SUP_E_SAMPLES {
        last = mittag_leffler(p, dir * s)?.norm();
        sup = sup.max(last);
        s *= ratio;
    }
    // leading asymptotics |E_α(z)| ≈ 1/(|z| |Γ(1-α)|) keep decreasing
    if last > 1e-2 * sup {
        return Err(Error::NonConvergence { achieved: last / sup });
    }
    Ok(sup)
}

/// Quasi-random points in `[0,1)^dims` (Halton sequence with a random shift
/// modulo 1 drawn from the seed).
struct Halton {
    primes: Vec<u64>,
    shift: Vec<f64>,
    index: u64,
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut c = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

impl Halton {
    fn new(dims: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            primes: first_primes(dims),
            shift: (0..dims).map(|_| rng.random::<f64>()).collect(),
            index: 1,
        }
    }

    fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.primes
            .iter()
            .zip(&self.shift)
            .map(|(&b, &s)| {
                let (mut f, mut r, mut k) = (1.0, 0.0, i);
                while k > 0 {
                    f /= b as f64;
                    r += f * (k % b) as f64;
                    k /= b;
                }
                (r + s).fract()
            })
            .collect()
    }
}

/// Point of the complex ball of radius `r` in `C^d` from `2d` cube
/// coordinates; points outside the unit ball are pushed onto its sphere so the
/// boundary, where difference quotients peak, is well covered.
fn ball_point(u: &[f64], r: f64) -> Vec<Complex64> {
    let v: Vec<f64> = u.iter().map(|x| 2.0 * x - 1.0).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = if norm > 1.0 { r / norm } else { r };
    v.chunks(2).map(|c| Complex64::new(c[0] * scale, c[1] * scale)).collect()
}

fn clamp_to_ball(x: &mut [Complex64], r: f64) {
    let n = euclidean_norm(x);
    if n > r {
        for z in x.iter_mut() {
            *z *= r / n;
        }
    }
}

/// Sampled lower estimate of `sup ‖h(x) - h(y)‖/‖x - y‖` over the complex
/// ball of radius `r` in `C^dim`: `samples` quasi-random pairs plus
/// `samples` near-diagonal pairs at separation `1e-6·r`.
pub fn local_lipschitz<H>(h: H, dim: usize, r: f64, samples: usize, seed: u64) -> Result<f64>
where
    H: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
{
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    if samples < MIN_LIPSCHITZ_SAMPLES {
        return Err(Error::Domain(format!(
            "need at least {MIN_LIPSCHITZ_SAMPLES} samples, got {samples}"
        )));
    }
    let eval = |x: &[Complex64]| -> Result<Vec<Complex64>> {
        let v = h(x)?;
        if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Evaluation(format!("non-finite value inside the ball of radius {r}")));
        }
        Ok(v)
    };
    let quotient = |x: &[Complex64], y: &[Complex64]| -> Result<f64> {
        let dx: Vec<Complex64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let sep = euclidean_norm(&dx);
        if sep == 0.0 {
            return Ok(0.0);
        }
        let (hx, hy) = (eval(x)?, eval(y)?);
        let dh: Vec<Complex64> = hx.iter().zip(&hy).map(|(a, b)| a - b).collect();
        Ok(euclidean_norm(&dh) / sep)
    };
    let real_dims = 2 * dim;
    let mut best: f64 = 0.0;
    let mut pairs = Halton::new(2 * real_dims, seed);
    for _ in 0..samples {
        let u = pairs.next_point();
        let x = ball_point(&u[..real_dims], r);
        let y = ball_point(&u[real_dims..], r);
        best = best.max(quotient(&x, &y)?);
    }
    let mut near = Halton::new(2 * real_dims, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    for _ in 0..samples {
        let u = near.next_point();
        let x = ball_point(&u[..real_dims], r);
        let dir = ball_point(&u[real_dims..], 1.0);
        let dn = euclidean_norm(&dir);
        if dn == 0.0 {
            continue;
        }
        let mut y: Vec<Complex64> = x.iter().zip(&dir).map(|(a, d)| a + d * (1e-6 * r / dn)).collect();
        clamp_to_ball(&mut y, r);
        best = best.max(quotient(&x, &y)?);
    }
    Ok(best)
}

/// Precomputed Lyapunov-Perron operator of a modal system on a fixed grid.
pub struct LpOperator<'a> {
    ms: &'a ModalSystem,
    order: FracOrder,
    grid: WGrid,
    /// `E_α(λ w_n^α)` per coordinate
    homogeneous: Vec<Vec<Complex64>>,
    weights: Vec<Arc<ConvolutionWeights<Complex64>>>,
}

impl<'a> LpOperator<'a> {
    pub fn new(ms: &'a ModalSystem, order: &FracOrder, grid: WGrid) -> Result<Self> {
        order.require_caputo()?;
        let alpha = order.alpha;
        let p = MLParams::new(alpha, 1.0)?;
        let mut cache: Vec<(Complex64, Vec<Complex64>, Arc<ConvolutionWeights<Complex64>>)> = Vec::new();
        let mut homogeneous = Vec::with_capacity(ms.dim());
        let mut weights = Vec::with_capacity(ms.dim());
        for &lambda in ms.lambdas() {
            if !cache.iter().any(|c| c.0 == lambda) {
                let e = grid
                    .nodes()
                    .map(|w| mittag_leffler(p, lambda * w.powf(alpha)))
                    .collect::<Result<Vec<_>>>()?;
                let wts = ml_kernel_weights(alpha, lambda, grid.step(), grid.intervals())?;
                cache.push((lambda, e, Arc::new(wts)));
            }
            let c = cache.iter().find(|c| c.0 == lambda).expect("cached above");
            homogeneous.push(c.1.clone());
            weights.push(Arc::clone(&c.2));
        }
        Ok(Self {
            ms,
            order: *order,
            grid,
            homogeneous,
            weights,
        })
    }

    pub fn grid(&self) -> WGrid {
        self.grid
    }

    /// `F_x ξ` at every node.
    pub fn apply(&self, x: &[Complex64], xi: &Trajectory) -> Result<Trajectory> {
        let d = self.ms.dim();
        if x.len() != d {
            return Err(Error::Dimension(format!("x has {} components, expected {d}", x.len())));
        }
        if !xi.grid.matches(&self.grid) || xi.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "trajectory has {} nodes of step {:e}, operator expects {} of step {:e}",
                xi.len(),
                xi.grid.step(),
                self.grid.len(),
                self.grid.step()
            )));
        }
        if xi.dim() != d {
            return Err(Error::Dimension(format!("trajectory has dimension {}, expected {d}", xi.dim())));
        }
        let hs: Vec<Vec<Complex64>> = xi.states.iter().map(|s| self.ms.h(s)).collect::<Result<_>>()?;
        let mut states = vec![vec![czero(); d]; self.grid.len()];
        for i in 0..d {
            let hi: Vec<Complex64> = hs.iter().map(|v| v[i]).collect();
            let integral = convolve_trapezoid(&self.weights[i], &hi);
            for (n, s) in states.iter_mut().enumerate() {
                s[i] = self.homogeneous[i][n] * x[i] + integral[n];
            }
        }
        Trajectory::new(self.order, self.grid, states)
    }
}

/// `F_x ξ` for a single application; see [`LpOperator`] to reuse weights.
pub fn lp_apply(ms: &ModalSystem, x: &[Complex64], xi: &Trajectory, order: &FracOrder) -> Result<Trajectory> {
    LpOperator::new(ms, order, xi.grid)?.apply(x, xi)
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardResult {
    pub trajectory: Trajectory,
    /// `‖ξ_{k+1} - ξ_k‖_∞` per iteration
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl PicardResult {
    /// Successive residual ratios.
    pub fn ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::PicardNonConvergence {
                iterations: self.residuals.len(),
                residual: self.residuals.last().copied().unwrap_or(f64::INFINITY),
            })
        }
    }
}

/// Picard iteration `ξ_{k+1} = F_x ξ_k` from `ξ_0 ≡ x` until the sup-norm
/// residual drops to `tol` or `max_iter` iterations were spent.
///
/// When a certificate is given, it is checked (warn-only) that it is valid
/// and `‖x‖ ≤ r*`.
pub fn picard_iterate(
    ms: &ModalSystem,
    x: &[Complex64],
    order: &FracOrder,
    grid: WGrid,
    max_iter: usize,
    tol: f64,
    certificate: Option<&ContractionCertificate>,
) -> Result<PicardResult> {
    let op = LpOperator::new(ms, order, grid)?;
    let mut warnings = Vec::new();
    match certificate {
        Some(c) if !c.valid => warnings.push(format!("certificate is not valid (q = {:.4})", c.q)),
        Some(c) if euclidean_norm(x) > c.r_star => warnings.push(format!(
            "|x| = {:.4e} exceeds the certified radius r* = {:.4e}",
            euclidean_norm(x),
            c.r_star
        )),
        Some(_) => {}
        None => warnings.push("no contraction certificate supplied".into()),
    }
    let mut xi = Trajectory::constant(*order, grid, x)?;
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = op.apply(x, &xi)?;
        let res = next.sup_distance(&xi)?;
        residuals.push(res);
        xi = next;
        if res <= tol {
            converged = true;
            break;
        }
    }
    Ok(PicardResult {
        trajectory: xi,
        residuals,
        converged,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub lipschitz_samples: usize,
    pub seed: u64,
    /// Replaces the sampled Lipschitz estimate of `h`.
    pub lipschitz_override: Option<f64>,
    pub jordan_hint: Option<JordanHint>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            lipschitz_samples: 4096,
            seed: 0,
            lipschitz_override: None,
            jordan_hint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionCertificate {
    pub alpha: f64,
    pub rho: f64,
    pub t0: f64,
    /// Ball radius in modal coordinates.
    pub r: f64,
    pub eigenvalues: Vec<Complex64>,
    pub c_per_block: Vec<f64>,
    pub c: f64,
    pub delta: f64,
    pub lip_h: f64,
    pub q: f64,
    pub sup_e: f64,
    /// `r(1-q)/supE` when valid, else 0.
    pub r_star: f64,
    pub valid: bool,
    /// `cond₂(TP)`: maps modal radii to physical ones and back.
    pub cond_tp: f64,
    /// Physical time beyond which the `C` integrals were replaced by the
    /// tail bound.
    pub t_max: f64,
    /// Set when `lip_h` is a sampled (lower) estimate rather than supplied.
    pub numerical: bool,
    pub lipschitz_samples: usize,
    pub seed: u64,
    /// When invalid: the largest radius `r·2^{-k}` with `q < 1`, if any.
    pub suggested_radius: Option<f64>,
}

fn modal_lipschitz(ms: &ModalSystem, r: f64, opts: &CertifyOptions) -> Result<f64> {
    if let Some(l) = opts.lipschitz_override {
        return Ok(l);
    }
    local_lipschitz(|y| ms.h(y), ms.dim(), r, opts.lipschitz_samples, opts.seed)
}

const SUGGESTION_HALVINGS: i32 = 40;

/// Contraction certificate for the zero solution of `D x = A x + f(x)`.
pub fn certify(
    a: &DMatrix<f64>,
    f: Arc<dyn Nonlinearity>,
    order: &FracOrder,
    r: f64,
    opts: &CertifyOptions,
) -> Result<ContractionCertificate> {
    order.require_caputo()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let alpha = order.alpha;
    let report = sector_check(a, alpha)?;
    match report.verdict {
        Verdict::Stable => {}
        Verdict::Unstable => return Err(Error::UnstableSpectrum { margin: report.margin }),
        Verdict::Inconclusive => return Err(Error::BoundaryInconclusive { tol: report.tol_boundary }),
    }
    let blocks: Vec<Complex64> = match &opts.jordan_hint {
        Some(h) => h.blocks.iter().map(|b| b.0).collect(),
        None => report.eigenvalues.clone(),
    };
    // per-block constants, independent of each other
    let per_block: Vec<Result<(CEstimate, f64)>> = std::thread::scope(|s| {
        let handles: Vec<_> = blocks
            .iter()
            .map(|&lambda| {
                s.spawn(move || -> Result<(CEstimate, f64)> {
                    Ok((
                        estimate_c_detailed(alpha, lambda, order)?,
                        estimate_sup_e(alpha, lambda, order)?,
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Evaluation("block estimate panicked".into()))))
            .collect()
    });
    let per_block: Vec<(CEstimate, f64)> = per_block.into_iter().collect::<Result<_>>()?;
    let c_per_block: Vec<f64> = per_block.iter().map(|b| b.0.value).collect();
    let c = c_per_block.iter().cloned().fold(0.0, f64::max);
    let sup_e = per_block.iter().map(|b| b.1).fold(0.0, f64::max);
    let t_max = per_block
        .iter()
        .map(|b| order.t_of_w(b.0.horizon_w))
        .fold(order.t0, f64::max);
    let delta = 1.0 / (2.0 * c);
    let ms = modal_transform(a, f, delta, opts.jordan_hint.as_ref())?;
    let lip_h = modal_lipschitz(&ms, r, opts)?;
    let q = c * lip_h;
    let valid = q < 1.0;
    let suggested_radius = if valid {
        None
    } else {
        let mut found = None;
        for k in 1..=SUGGESTION_HALVINGS {
            let rk = r * 0.5f64.powi(k);
            if c * modal_lipschitz(&ms, rk, opts)? < 1.0 {
                found = Some(rk);
                break;
            }
        }
        found
    };
    Ok(ContractionCertificate {
        alpha,
        rho: order.rho,
        t0: order.t0,
        r,
        eigenvalues: report.eigenvalues,
        c_per_block,
        c,
        delta,
        lip_h,
        q,
        sup_e,
        r_star: if valid { r * (1.0 - q) / sup_e } else { 0.0 },
        valid,
        cond_tp: ms.cond_tp,
        t_max,
        numerical: opts.lipschitz_override.is_none(),
        lipschitz_samples: opts.lipschitz_samples,
        seed: opts.seed,
        suggested_radius,
    })
}

/// Random trajectory whose states are uniformly spread in the complex ball
/// of radius `r`, for sampled checks of the operator inequalities.
pub fn random_ball_trajectory(rng: &mut impl Rng, order: &FracOrder, grid: WGrid, dim: usize, r: f64) -> Result<Trajectory> {
    let states = (0..grid.len())
        .map(|_| {
            let u: Vec<f64> = (0..2 * dim).map(|_| rng.random::<f64>()).collect();
            let mut p = ball_point(&u, r);
            clamp_to_ball(&mut p, r);
            p
        })
        .collect();
    Trajectory::new(*order, grid, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::{FnNonlinearity, LorenzG, Zero};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn c_matches_reciprocal_modulus() {
        let order = FracOrder::new(0.5, 1.0, 1.0).unwrap();
        let est = estimate_c_detailed(0.5, c(-1.0), &order).unwrap();
        assert!((est.value - 1.0).abs() < 1e-5, "{est:?}");
        assert!(est.tail <= 2e-6 * est.value);
    }

    #[test]
    fn sup_e_of_negative_real_lambda_is_one() {
        let order = FracOrder::new(0.9, 1.2, 1.0).unwrap();
        assert_eq!(estimate_sup_e(0.9, c(-3.0), &order).unwrap(), 1.0);
    }

    #[test]
    fn lipschitz_of_square() {
        let l = local_lipschitz(|x| Ok(vec![x[0] * x[0]]), 1, 0.1, 2000, 7).unwrap();
        assert!((l - 0.2).abs() <= 0.01, "{l}");
        assert_eq!(local_lipschitz(|_| Ok(vec![c(0.0)]), 1, 0.1, 1000, 7).unwrap(), 0.0);
        assert!(local_lipschitz(|_| Ok(vec![c(0.0)]), 1, 0.1, 10, 7).is_err());
    }

    #[test]
    fn lorenz_lipschitz_below_jacobian_bound() {
        let g = LorenzG;
        let l = local_lipschitz(|x| g.eval(x), 3, 0.1, 4000, 1).unwrap();
        let bound = g.lipschitz_bound(0.1).unwrap();
        assert!(l <= bound * (1.0 + 1e-9) && l >= 0.7 * bound, "{l} vs {bound}");
    }

    #[test]
    fn trivial_certificate() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]));
        let order = FracOrder::new(0.9, 1.0, 1.0).unwrap();
        let cert = certify(&a, Arc::new(Zero(2)), &order, 1.0, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.lip_h, 0.0);
        assert_eq!(cert.q, 0.0);
        assert!(cert.valid);
        assert_eq!(cert.r_star, 1.0);
        assert_eq!(cert.delta * 2.0 * cert.c, 1.0);
    }

    #[test]
    fn unstable_spectrum_rejected() {
        let order = FracOrder::new(0.9, 1.0, 1.0).unwrap();
        let err = certify(&DMatrix::identity(1, 1), Arc::new(Zero(1)), &order, 1.0, &CertifyOptions::default());
        assert!(matches!(err, Err(Error::UnstableSpectrum { .. })));
    }

    #[test]
    fn zero_forcing_operator_is_homogeneous() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]));
        let order = FracOrder::new(0.7, 1.0, 1.0).unwrap();
        let ms = modal_transform(&a, Arc::new(Zero(2)), 0.5, None).unwrap();
        let grid = WGrid::from_horizon(&order, 3.0, 32).unwrap();
        let xi = Trajectory::constant(order, grid, &[c(5.0), c(-5.0)]).unwrap();
        let x = [c(0.0), c(0.0)];
        let out = lp_apply(&ms, &x, &xi, &order).unwrap();
        assert_eq!(out.sup_norm, 0.0);
        let picard = picard_iterate(&ms, &[c(1.0), c(1.0)], &order, grid, 5, 1e-14, None).unwrap();
        assert!(picard.converged && picard.residuals.len() == 2 && picard.residuals[1] == 0.0);
    }

    #[test]
    fn grid_mismatch_reported() {
        let a = DMatrix::from_element(1, 1, -1.0);
        let order = FracOrder::new(0.7, 1.0, 1.0).unwrap();
        let ms = modal_transform(&a, Arc::new(FnNonlinearity::new(1, |x: &[Complex64]| vec![x[0] * x[0]])), 0.5, None).unwrap();
        let op = LpOperator::new(&ms, &order, WGrid::from_horizon(&order, 3.0, 32).unwrap()).unwrap();
        let other = Trajectory::constant(order, WGrid::from_horizon(&order, 3.0, 16).unwrap(), &[c(0.1)]).unwrap();
        assert!(matches!(op.apply(&[c(0.1)], &other), Err(Error::GridMismatch(_))));
    }
}
