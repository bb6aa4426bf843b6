//! Eigenvalues, the sector stability test and the δ-scaled modal form.
//!
//! Eigenvalues come from a Householder reduction to Hessenberg form followed
//! by single-shift complex QR with Wilkinson shifts. Eigenvectors are null
//! vectors of `A - λI`; Jordan chains are never computed numerically, a
//! defective matrix needs an explicit [`JordanHint`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nonlinear::Nonlinearity;
use crate::specfun::principal_arg;

/// Half-width of the band around `απ/2` in which the sector test gives up.
pub const TOL_BOUNDARY: f64 = 1e-9;
/// Largest eigenvector-matrix condition accepted as diagonalizable.
pub const COND_CAP: f64 = 1e8;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

pub type CMatrix = DMatrix<Complex64>;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn check_square(a: &DMatrix<f64>) -> Result<usize> {
    let d = a.nrows();
    if d == 0 || a.ncols() != d {
        return Err(Error::Dimension(format!(
            "expected a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(d)
}

/// Householder reduction to upper Hessenberg form.
fn hessenberg(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x = h.view((k + 1, k), (n - k - 1, 1)).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.norm();
        if vn == 0.0 {
            continue;
        }
        v /= vn;
        // H <- (I - 2vvᵀ) H (I - 2vvᵀ) on the trailing rows/columns.
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..v.len() {
                s += v[i] * h[(k + 1 + i, j)];
            }
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= 2.0 * v[i] * s;
            }
        }
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..v.len() {
                s += h[(i, k + 1 + j)] * v[j];
            }
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= 2.0 * s * v[j];
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
    }
    h
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Shifted QR on a complex Hessenberg matrix; returns the diagonal of the
/// converged Schur form.
fn hessenberg_qr(mut h: CMatrix) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eig = vec![czero(); n];
    let cap = MAX_SWEEPS_PER_EIGENVALUE * n.max(1);
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let scale = if scale == 0.0 { 1.0 } else { scale };
            if h[(l, l - 1)].norm() <= f64::EPSILON * scale {
                h[(l, l - 1)] = czero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if sweeps >= cap {
            return Err(Error::EigenConvergence {
                iterations: sweeps,
                deflated: n - 1 - hi,
                dim: n,
            });
        }
        sweeps += 1;
        since_deflation += 1;
        let mut mu = wilkinson_shift(
            h[(hi - 1, hi - 1)],
            h[(hi - 1, hi)],
            h[(hi, hi - 1)],
            h[(hi, hi)],
        );
        if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            mu = h[(hi, hi)] + Complex64::new(h[(hi, hi - 1)].norm(), 0.0) * 0.75;
        }
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), czero())
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = c.conj() * a + s.conj() * b;
                h[(k + 1, j)] = -s * a + c * b;
            }
            rotations.push((c, s));
        }
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let k = l + idx;
            for i in l..=(k + 1).min(hi) {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s;
                h[(i, k + 1)] = -a * s.conj() + b * c.conj();
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}

fn sort_eigenvalues(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Makes the spectrum of a real matrix closed under conjugation: tiny
/// imaginary parts are dropped and complex eigenvalues are averaged with
/// their nearest conjugate partner.
fn symmetrize_real_spectrum(eig: &mut [Complex64], scale: f64) {
    let tiny = 1e-13 * scale;
    for z in eig.iter_mut() {
        if z.im.abs() <= tiny {
            z.im = 0.0;
        }
    }
    let mut used = vec![false; eig.len()];
    for i in 0..eig.len() {
        if used[i] || eig[i].im <= 0.0 {
            continue;
        }
        let partner = (0..eig.len())
            .filter(|&j| !used[j] && j != i && eig[j].im < 0.0)
            .min_by(|&a, &b| {
                let da = (eig[a] - eig[i].conj()).norm();
                let db = (eig[b] - eig[i].conj()).norm();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            });
        if let Some(j) = partner {
            let avg = (eig[i] + eig[j].conj()) * 0.5;
            eig[i] = avg;
            eig[j] = avg.conj();
            used[i] = true;
            used[j] = true;
        }
    }
}

/// All eigenvalues of a real square matrix, with multiplicity, sorted by
/// decreasing real part and then decreasing imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_square(a)?;
    let h = hessenberg(a).map(|v| Complex64::new(v, 0.0));
    let mut eig = hessenberg_qr(h)?;
    symmetrize_real_spectrum(&mut eig, a.norm().max(f64::MIN_POSITIVE));
    sort_eigenvalues(&mut eig);
    Ok(eig)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub alpha: f64,
    pub eigenvalues: Vec<Complex64>,
    pub args: Vec<f64>,
    pub threshold: f64,
    /// `min |arg λ| - απ/2`
    pub margin: f64,
    pub stable: bool,
    pub verdict: Verdict,
    pub tol_boundary: f64,
}

/// Sector test on a given spectrum: stable iff every `|arg λ|` exceeds
/// `απ/2 + tol`, inconclusive if some argument is within `tol` of `απ/2`.
pub fn sector_report(eigenvalues: Vec<Complex64>, alpha: f64) -> Result<SpectralReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Order(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let threshold = 0.5 * alpha * PI;
    let args: Vec<f64> = eigenvalues.iter().map(|&z| principal_arg(z)).collect();
    // λ = 0 has no argument; it sits on every sector boundary that matters.
    let margin = eigenvalues
        .iter()
        .zip(&args)
        .map(|(z, a)| if z.norm() == 0.0 { -threshold } else { a.abs() - threshold })
        .fold(f64::INFINITY, f64::min);
    let verdict = if margin.abs() <= TOL_BOUNDARY {
        Verdict::Inconclusive
    } else if margin > 0.0 {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    Ok(SpectralReport {
        alpha,
        eigenvalues,
        args,
        threshold,
        margin,
        stable: verdict == Verdict::Stable,
        verdict,
        tol_boundary: TOL_BOUNDARY,
    })
}

pub fn sector_check(a: &DMatrix<f64>, alpha: f64) -> Result<SpectralReport> {
    sector_report(eigenvalues(a)?, alpha)
}

/// Exact Jordan data for matrices that cannot be diagonalized numerically:
/// `A = T J T⁻¹` with `J = diag(J_{d_i}(λ_i))`. Columns of `t` are ordered
/// block by block.
#[derive(Debug, Clone)]
pub struct JordanHint {
    pub t: CMatrix,
    pub blocks: Vec<(Complex64, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModalBlock {
    pub lambda: Complex64,
    pub size: usize,
    /// `η_i`: whether the block carries a nilpotent part.
    pub nilpotent: bool,
}

/// The system `D y = Λ y + h(y)` obtained from `x = T P y`, with
/// `h(y) = δ N y + (TP)⁻¹ f(TP y)`.
#[derive(Clone)]
pub struct ModalSystem {
    pub blocks: Vec<ModalBlock>,
    pub t: CMatrix,
    pub p: DVector<f64>,
    pub delta: f64,
    pub cond_tp: f64,
    tp: CMatrix,
    tp_inv: CMatrix,
    f: Arc<dyn Nonlinearity>,
    /// `λ` of the block each coordinate belongs to.
    lambdas: Vec<Complex64>,
    /// Whether coordinate `k` receives `δ y_{k+1}` from the nilpotent part.
    coupled: Vec<bool>,
}

impl fmt::Debug for ModalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModalSystem")
            .field("blocks", &self.blocks)
            .field("delta", &self.delta)
            .field("cond_tp", &self.cond_tp)
            .finish_non_exhaustive()
    }
}

impl ModalSystem {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn tp(&self) -> &CMatrix {
        &self.tp
    }

    pub fn tp_inv(&self) -> &CMatrix {
        &self.tp_inv
    }

    pub fn nonlinearity(&self) -> &Arc<dyn Nonlinearity> {
        &self.f
    }

    /// `diag(λ_i I + δ N)`
    pub fn block_matrix(&self) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for k in 0..d {
            m[(k, k)] = self.lambdas[k];
            if self.coupled[k] {
                m[(k, k + 1)] = Complex64::new(self.delta, 0.0);
            }
        }
        m
    }

    pub fn h(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let d = self.dim();
        if y.len() != d {
            return Err(Error::Dimension(format!("modal state has {} components, expected {d}", y.len())));
        }
        let x = &self.tp * DVector::from_column_slice(y);
        let fx = DVector::from_vec(self.f.eval(x.as_slice())?);
        let mut out = &self.tp_inv * fx;
        for k in 0..d {
            if self.coupled[k] {
                out[k] += y[k + 1] * self.delta;
            }
        }
        Ok(out.as_slice().to_vec())
    }

    /// Right-hand side `Λ y + h(y)` of the modal system.
    pub fn rhs(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = self.h(y)?;
        for (k, o) in out.iter_mut().enumerate() {
            *o += self.lambdas[k] * y[k];
        }
        Ok(out)
    }

    pub fn to_modal(&self, x: &[Complex64]) -> Vec<Complex64> {
        (&self.tp_inv * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn to_physical(&self, y: &[Complex64]) -> Vec<Complex64> {
        (&self.tp * DVector::from_column_slice(y)).as_slice().to_vec()
    }
}

/// Null vectors of `m` (d×d) spanning a space of the requested dimension, by
/// Gaussian elimination with full pivoting stopped after `d - nullity` steps.
fn forced_null_space(m: &CMatrix, nullity: usize) -> Vec<DVector<Complex64>> {
    let d = m.nrows();
    let rank = d - nullity;
    let mut a = m.clone();
    let mut cols: Vec<usize> = (0..d).collect();
    for k in 0..rank {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for i in k..d {
            for j in k..d {
                let v = a[(i, j)].norm();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        a.swap_rows(k, pr);
        a.swap_columns(k, pc);
        cols.swap(k, pc);
        let piv = a[(k, k)];
        if piv.norm() == 0.0 {
            continue;
        }
        for i in (k + 1)..d {
            let factor = a[(i, k)] / piv;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in k..d {
                let v = a[(k, j)];
                a[(i, j)] -= factor * v;
            }
        }
    }
    (0..nullity)
        .map(|free| {
            // permuted unknowns: z[rank + free] = 1, other free ones 0
            let mut z = DVector::from_element(d, czero());
            z[rank + free] = Complex64::new(1.0, 0.0);
            for k in (0..rank).rev() {
                let mut s = czero();
                for j in (k + 1)..d {
                    s += a[(k, j)] * z[j];
                }
                z[k] = if a[(k, k)].norm() == 0.0 { czero() } else { -s / a[(k, k)] };
            }
            let mut v = DVector::from_element(d, czero());
            for (k, &c) in cols.iter().enumerate() {
                v[c] = z[k];
            }
            v
        })
        .collect()
}

/// Unit 2-norm with the first nonzero component real and positive.
fn normalize(v: &mut DVector<Complex64>) {
    let n = v.norm();
    if n == 0.0 {
        return;
    }
    *v /= Complex64::new(n, 0.0);
    let tiny = 1e-12;
    if let Some(first) = v.iter().find(|z| z.norm() > tiny).copied() {
        let phase = first / first.norm();
        *v /= phase;
    }
}

/// 2-norm condition number.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvector matrix of a diagonalizable real matrix. Returns eigenvalues
/// in [`eigenvalues`] order and the matching unit eigenvectors as columns.
pub fn eigenvectors(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, CMatrix)> {
    let d = check_square(a)?;
    let eig = eigenvalues(a)?;
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let cluster_tol = 1e-6 * scale;
    let mut t = CMatrix::zeros(d, d);
    let mut assigned = vec![false; d];
    for i in 0..d {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..d)
            .filter(|&j| !assigned[j] && (eig[j] - eig[i]).norm() <= cluster_tol)
            .collect();
        let center = members.iter().map(|&j| eig[j]).sum::<Complex64>() / members.len() as f64;
        let shifted = &ac - CMatrix::identity(d, d) * center;
        let vectors = forced_null_space(&shifted, members.len());
        for (&j, mut v) in members.iter().zip(vectors) {
            normalize(&mut v);
            let residual = (&ac * &v - &v * eig[j]).norm();
            if !(residual <= 1e-6 * scale) {
                return Err(Error::Defective { cond: f64::INFINITY });
            }
            t.set_column(j, &v);
            assigned[j] = true;
        }
    }
    let cond = condition_number(&t);
    if !(cond <= COND_CAP) {
        return Err(Error::Defective { cond });
    }
    Ok((eig, t))
}

fn jordan_matrix(blocks: &[(Complex64, usize)], off: Complex64) -> CMatrix {
    let d: usize = blocks.iter().map(|b| b.1).sum();
    let mut j = CMatrix::zeros(d, d);
    let mut k = 0;
    for &(lambda, size) in blocks {
        for i in 0..size {
            j[(k + i, k + i)] = lambda;
            if i + 1 < size {
                j[(k + i, k + i + 1)] = off;
            }
        }
        k += size;
    }
    j
}

/// Builds the δ-scaled modal system of `D x = A x + f(x)`.
pub fn modal_transform(
    a: &DMatrix<f64>,
    f: Arc<dyn Nonlinearity>,
    delta: f64,
    jordan_hint: Option<&JordanHint>,
) -> Result<ModalSystem> {
    let d = check_square(a)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if f.dim() != d {
        return Err(Error::Dimension(format!(
            "nonlinearity has dimension {}, matrix has {d}",
            f.dim()
        )));
    }
    let (t, blocks) = match jordan_hint {
        Some(hint) => {
            validate_hint(a, hint)?;
            (hint.t.clone(), hint.blocks.clone())
        }
        None => {
            let (eig, t) = eigenvectors(a)?;
            (t, eig.into_iter().map(|l| (l, 1)).collect())
        }
    };
    let mut p = DVector::from_element(d, 1.0);
    let mut lambdas = Vec::with_capacity(d);
    let mut coupled = Vec::with_capacity(d);
    let mut k = 0;
    for &(lambda, size) in &blocks {
        for i in 0..size {
            p[k + i] = delta.powi(i as i32);
            lambdas.push(lambda);
            coupled.push(i + 1 < size);
        }
        k += size;
    }
    let pc = CMatrix::from_diagonal(&p.map(|v| Complex64::new(v, 0.0)));
    let tp = &t * pc;
    let tp_inv = tp
        .clone()
        .try_inverse()
        .ok_or(Error::Defective { cond: f64::INFINITY })?;
    let cond_tp = condition_number(&tp);
    Ok(ModalSystem {
        blocks: blocks
            .iter()
            .map(|&(lambda, size)| ModalBlock {
                lambda,
                size,
                nilpotent: size > 1,
            })
            .collect(),
        t,
        p,
        delta,
        cond_tp,
        tp,
        tp_inv,
        f,
        lambdas,
        coupled,
    })
}

fn validate_hint(a: &DMatrix<f64>, hint: &JordanHint) -> Result<()> {
    let d = a.nrows();
    if hint.t.nrows() != d || hint.t.ncols() != d {
        return Err(Error::JordanHint(format!(
            "T is {}x{}, matrix is {d}x{d}",
            hint.t.nrows(),
            hint.t.ncols()
        )));
    }
    if hint.blocks.iter().any(|b| b.1 == 0) {
        return Err(Error::JordanHint("block sizes must be positive".into()));
    }
    let total: usize = hint.blocks.iter().map(|b| b.1).sum();
    if total != d {
        return Err(Error::JordanHint(format!("block sizes sum to {total}, expected {d}")));
    }
    let t_inv = hint
        .t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::JordanHint("T is singular".into()))?;
    let j = jordan_matrix(&hint.blocks, Complex64::new(1.0, 0.0));
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let err = (&t_inv * ac * &hint.t - j).norm();
    let scale = a.norm().max(1.0);
    if err > 1e-8 * scale {
        return Err(Error::JordanHint(format!(
            "T^-1 A T differs from the Jordan form by {err:.3e}"
        )));
    }
    Ok(())
}
