//! Trajectories of `D^{α,ρ}_C x = A x + f(x)`: closed-form scalar linear
//! solutions and a fractional Adams predictor-corrector solver.
//!
//! Both work in `w = (t^ρ - t0^ρ)/ρ`, where the problem is a classical Caputo
//! problem on a uniform grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraccalc::{convolve_trapezoid, ConvolutionWeights, FracOrder, SampledFunction, WGrid};
use crate::nonlinear::Nonlinearity;
use crate::specfun::{mittag_leffler, real_gamma, rgamma, MLParams};
use crate::spectral::ModalSystem;

/// States above this norm count as a blow-up.
pub const DIVERGENCE_CAP: f64 = 1e8;
pub const MIN_STEPS: usize = 16;

pub fn euclidean_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub order: FracOrder,
    pub grid: WGrid,
    pub t_nodes: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub sup_norm: f64,
    /// Index of the first node whose state exceeded [`DIVERGENCE_CAP`]; the
    /// stored states stop just before it.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    /// Trajectory on the first `states.len()` nodes of `grid`.
    pub fn new(order: FracOrder, grid: WGrid, states: Vec<Vec<Complex64>>) -> Result<Self> {
        if states.len() > grid.len() {
            return Err(Error::Grid(format!(
                "{} states for a grid of {} nodes",
                states.len(),
                grid.len()
            )));
        }
        if let Some(d) = states.first().map(Vec::len) {
            if states.iter().any(|s| s.len() != d) {
                return Err(Error::Dimension("states of unequal length".into()));
            }
        }
        let t_nodes = (0..states.len()).map(|k| order.t_of_w(grid.w(k))).collect();
        let sup_norm = states.iter().map(|s| euclidean_norm(s)).fold(0.0, f64::max);
        Ok(Self {
            order,
            grid,
            t_nodes,
            states,
            sup_norm,
            diverged_at: None,
        })
    }

    /// The constant trajectory `x` on every node.
    pub fn constant(order: FracOrder, grid: WGrid, x: &[Complex64]) -> Result<Self> {
        Self::new(order, grid, vec![x.to_vec(); grid.len()])
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| euclidean_norm(s)).collect()
    }

    pub fn final_norm(&self) -> f64 {
        self.states.last().map_or(0.0, |s| euclidean_norm(s))
    }

    /// Index of the node where the sup norm is attained.
    pub fn argmax_norm(&self) -> usize {
        self.norms()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &n)| if n > best.1 { (k, n) } else { best })
            .0
    }

    pub fn component(&self, i: usize) -> Vec<Complex64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    /// `sup_k ‖self_k - other_k‖`.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if !self.grid.matches(&other.grid) || self.len() != other.len() || self.dim() != other.dim() {
            return Err(Error::GridMismatch(format!(
                "trajectories with {} and {} nodes",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    }

    /// Applies a linear map to every state (e.g. back to physical coordinates).
    pub fn map_states(&self, f: impl Fn(&[Complex64]) -> Vec<Complex64>) -> Result<Self> {
        let mut out = Self::new(self.order, self.grid, self.states.iter().map(|s| f(s)).collect())?;
        out.diverged_at = self.diverged_at;
        Ok(out)
    }
}

/// Below this index the ML weights come from antiderivative differences;
/// beyond it the kernel is smooth on the scale of the step and the weights
/// use nodal values, avoiding cancellation in large antiderivatives.
const ANTIDERIVATIVE_NODES: usize = 48;

/// Product-trapezoid weights for the kernel `k(s) = s^{α-1} E_{α,α}(λ s^α)`.
pub fn ml_kernel_weights(alpha: f64, lambda: Complex64, step: f64, n: usize) -> Result<ConvolutionWeights<Complex64>> {
    let p1 = MLParams::new(alpha, alpha + 1.0)?;
    let p2 = MLParams::new(alpha, alpha + 2.0)?;
    let pk = MLParams::new(alpha, alpha)?;
    let near = n.min(ANTIDERIVATIVE_NODES);
    let mut k1 = Vec::with_capacity(near + 1);
    let mut k2 = Vec::with_capacity(near + 1);
    for m in 0..=near {
        let s = m as f64 * step;
        let sa = s.powf(alpha);
        let z = lambda * sa;
        k1.push(mittag_leffler(p1, z)? * sa);
        k2.push(mittag_leffler(p2, z)? * (sa * s));
    }
    let mut w = ConvolutionWeights::from_antiderivatives(&k1, &k2, step);
    if n <= near {
        return Ok(w);
    }
    // nodal kernel values k_m for m ≥ near - 3
    let first = near - 3;
    let mut k = Vec::with_capacity(n + 1 - first);
    for m in first..=n {
        let s = m as f64 * step;
        let sa = s.powf(alpha);
        k.push(mittag_leffler(pk, lambda * sa)? * (sa / s));
    }
    let kv = |m: usize| k[m - first];
    for m in near..n {
        // ∫ hat_m k, k interpolated on five nodes (three at the last one)
        let diag = if m + 2 <= n {
            (kv(m) * (97.0 / 120.0) + (kv(m - 1) + kv(m + 1)) * 0.1 - (kv(m - 2) + kv(m + 2)) * (1.0 / 240.0)) * step
        } else {
            (kv(m) * 10.0 + kv(m - 1) + kv(m + 1)) * (step / 12.0)
        };
        w.diag.push(diag);
    }
    for m in (near + 1)..=n {
        // ∫_{(m-1)h}^{mh} k(s) (s - (m-1)h)/h ds, quartic through m-4..m
        let s = kv(m - 4) * (-7.0 / 480.0) + kv(m - 3) * (29.0 / 360.0) - kv(m - 2) * (47.0 / 240.0)
            + kv(m - 1) * 0.375
            + kv(m) * (367.0 / 1440.0);
        w.start.push(s * step);
    }
    Ok(w)
}

/// `u(w) = c E_α(λ w^α) + ∫_0^w (w-v)^{α-1} E_{α,α}(λ(w-v)^α) h(v) dv` at
/// every node of `grid`.
pub fn solve_linear_scalar(
    lambda: Complex64,
    c: Complex64,
    forcing: Option<&SampledFunction<Complex64>>,
    order: &FracOrder,
    grid: WGrid,
) -> Result<Trajectory> {
    order.require_caputo()?;
    let alpha = order.alpha;
    if let Some(h) = forcing {
        if !h.grid().matches(&grid) {
            return Err(Error::GridMismatch("forcing is sampled on a different grid".into()));
        }
    }
    let p = MLParams::new(alpha, 1.0)?;
    let mut values: Vec<Complex64> = grid
        .nodes()
        .map(|w| mittag_leffler(p, lambda * w.powf(alpha)).map(|e| e * c))
        .collect::<Result<_>>()?;
    if let Some(h) = forcing {
        let weights = ml_kernel_weights(alpha, lambda, grid.step(), grid.intervals())?;
        for (v, i) in values.iter_mut().zip(convolve_trapezoid(&weights, h.values())) {
            *v += i;
        }
    }
    Trajectory::new(*order, grid, values.into_iter().map(|v| vec![v]).collect())
}

/// Starting weights that make the trapezoidal product rule exact for
/// `s^{kα}`, `kα < 1`, on top of the linear functions it integrates exactly.
///
/// Solutions of fractional problems behave like `y0 + c w^α + …` near the
/// base point, which limits plain product integration to order `2α` there.
/// The correction uses `F` at nodes `0..=m` with weights chosen per node from
/// the residual of the plain rule on each power.
struct StartingWeights {
    m: usize,
    /// weights at node `n`, `n = 0..=N` (row 0 unused)
    corr: Vec<Vec<f64>>,
}

/// At most this many fractional powers are corrected.
const MAX_CORRECTED_POWERS: usize = 3;
/// Powers closer than this to 1 are skipped (the system turns singular).
const POWER_GAP: f64 = 0.05;

impl StartingWeights {
    fn new(alpha: f64, n: usize) -> Result<Self> {
        let mut exps = vec![0.0];
        for k in 1..=MAX_CORRECTED_POWERS {
            let g = k as f64 * alpha;
            if g < 1.0 - POWER_GAP {
                exps.push(g);
            }
        }
        exps.push(1.0);
        let m = exps.len() - 1;
        let pow = |j: usize, g: f64| if j == 0 { if g == 0.0 { 1.0 } else { 0.0 } } else { (j as f64).powf(g) };
        let v_inv = DMatrix::from_fn(m + 1, m + 1, |i, j| pow(j, exps[i]))
            .try_inverse()
            .ok_or_else(|| Error::Order(format!("starting weights undefined for alpha = {alpha}")))?;
        let unit = ConvolutionWeights::riemann_liouville(alpha, 1.0, n);
        let exact_scale: Vec<f64> = exps
            .iter()
            .map(|&g| real_gamma(g + 1.0).map(|v| v * rgamma(g + 1.0 + alpha)))
            .collect::<Result<_>>()?;
        let mut corr = vec![vec![0.0; m + 1]; n + 1];
        let mut powers = vec![0.0; n + 1];
        for (i, &g) in exps.iter().enumerate() {
            // the rule is already exact for 1 and s
            if g == 0.0 || g == 1.0 {
                continue;
            }
            for (j, p) in powers.iter_mut().enumerate() {
                *p = pow(j, g);
            }
            for k in 1..=n {
                let exact = exact_scale[i] * (k as f64).powf(g + alpha);
                let residual = exact - (1..=k).map(|j| unit.diag[k - j] * powers[j]).sum::<f64>();
                for j in 0..=m {
                    corr[k][j] += v_inv[(j, i)] * residual;
                }
            }
        }
        Ok(Self { m, corr })
    }
}

const START_ITERATIONS: usize = 50;
const NEWTON_ITERATIONS: usize = 8;

/// Fractional Adams PECE for `D^α y = F(y)`, `y(0) = y0` on the `w`-grid
/// covering `[t0, horizon]` with `steps` intervals.
///
/// The corrector is the trapezoidal product rule with starting corrections
/// (see [`StartingWeights`]), solved for the new node by simplified Newton so
/// stiff modes stay stable; the predictor, its starting guess, is the same
/// rule fed with `F_n` extrapolated linearly from the two previous nodes. The
/// first `m` nodes, which the corrections couple, are solved jointly.
pub fn simulate_field<F>(mut rhs: F, y0: &[Complex64], order: &FracOrder, horizon: f64, steps: usize) -> Result<Trajectory>
where
    F: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
{
    order.require_caputo()?;
    if steps < MIN_STEPS {
        return Err(Error::Steps(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    let grid = WGrid::from_horizon(order, horizon, steps)?;
    let d = y0.len();
    let alpha = order.alpha;
    let weights = ConvolutionWeights::riemann_liouville(alpha, grid.step(), steps);
    let sw = StartingWeights::new(alpha, steps)?;
    let ha = grid.step().powf(alpha);
    let m = sw.m;
    let zero = Complex64::new(0.0, 0.0);

    // Corrector value at node n from F at nodes 0..=n (the last one given).
    let corrector = |n: usize, hist: &[Complex64], fnode: &[Complex64], out: &mut [Complex64]| {
        for i in 0..d {
            out[i] = y0[i] + hist[i] * weights.start[n] + fnode[i] * weights.diag[0];
        }
        for j in 1..n {
            let wt = weights.diag[n - j];
            for (o, f) in out.iter_mut().zip(&hist[j * d..(j + 1) * d]) {
                *o += f * wt;
            }
        }
        for j in 0..=m {
            let wt = sw.corr[n][j] * ha;
            let fj = if j == n { fnode } else { &hist[j * d..(j + 1) * d] };
            for (o, f) in out.iter_mut().zip(fj) {
                *o += f * wt;
            }
        }
    };

    // Joint solve for nodes 1..=m.
    let f0 = eval_checked(&mut rhs, y0)?;
    let start: Vec<Vec<Complex64>> = (1..=m)
        .map(|k| {
            let c = grid.w(k).powf(alpha) * rgamma(1.0 + alpha);
            y0.iter().zip(&f0).map(|(y, f)| y + f * c).collect()
        })
        .collect();
    let mut hist: Vec<Complex64> = Vec::with_capacity((steps + 1) * d);
    // residual Y - Φ(Y) of the coupled starting equations, flattened
    let mut residual = |ys: &[Complex64], hist: &mut Vec<Complex64>| -> Result<Vec<Complex64>> {
        hist.clear();
        hist.extend_from_slice(&f0);
        for y in ys.chunks(d) {
            hist.extend(eval_checked(&mut rhs, y)?);
        }
        let mut out = vec![zero; m * d];
        for n in 1..=m {
            let fnode = hist[n * d..(n + 1) * d].to_vec();
            corrector(n, hist, &fnode, &mut out[(n - 1) * d..n * d]);
        }
        Ok(ys.iter().zip(&out).map(|(y, p)| y - p).collect())
    };
    // Newton with a forward-difference Jacobian: stiff modes make plain
    // fixed-point iteration diverge on coarse grids.
    let mut ys: Vec<Complex64> = start.concat();
    let size_of = |ys: &[Complex64]| ys.chunks(d).map(euclidean_norm).fold(0.0, f64::max);
    for _ in 0..START_ITERATIONS {
        let g = residual(&ys, &mut hist)?;
        let scale = 1.0 + size_of(&ys);
        if g.iter().map(|v| v.norm()).fold(0.0, f64::max) <= 1e-15 * scale {
            break;
        }
        let eps = 1e-7 * scale;
        let mut jac = DMatrix::from_element(m * d, m * d, zero);
        for k in 0..m * d {
            let mut yk = ys.clone();
            yk[k] += eps;
            let gk = residual(&yk, &mut hist)?;
            for (r, (a, b)) in gk.iter().zip(&g).enumerate() {
                jac[(r, k)] = (a - b) / eps;
            }
        }
        let step = jac
            .lu()
            .solve(&nalgebra::DVector::from_vec(g))
            .ok_or_else(|| Error::NonConvergence { achieved: f64::INFINITY })?;
        let change = step.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (y, s) in ys.iter_mut().zip(step.iter()) {
            *y -= s;
        }
        if !(size_of(&ys) <= DIVERGENCE_CAP) || change <= 1e-15 * (1.0 + size_of(&ys)) {
            break;
        }
    }
    let start: Vec<Vec<Complex64>> = ys.chunks(d).map(<[Complex64]>::to_vec).collect();

    let mut states: Vec<Vec<Complex64>> = Vec::with_capacity(steps + 1);
    states.push(y0.to_vec());
    hist.clear();
    hist.extend_from_slice(&f0);
    let mut diverged_at = None;
    for (k, y) in start.into_iter().enumerate() {
        if !(euclidean_norm(&y) <= DIVERGENCE_CAP) {
            diverged_at = Some(k + 1);
            break;
        }
        hist.extend(eval_checked(&mut rhs, &y)?);
        states.push(y);
    }
    let mut pred = vec![zero; d];
    let mut corr = vec![zero; d];
    let mut known = vec![zero; d];
    let zeros = vec![zero; d];
    if diverged_at.is_none() {
        for n in (m + 1)..=steps {
            // predictor: the corrected trapezoidal rule with F_n linearly
            // extrapolated from the two previous nodes
            let fext: Vec<Complex64> = (0..d)
                .map(|i| hist[(n - 1) * d + i] * 2.0 - hist[(n - 2) * d + i])
                .collect();
            corrector(n, &hist, &fext, &mut pred);
            // implicit corrector y = K + c F(y) by simplified Newton from
            // the predictor; K is the corrector with F_n = 0
            let c = weights.diag[0];
            corrector(n, &hist, &zeros, &mut known);
            let fp = eval_checked(&mut rhs, &pred)?;
            let scale = 1.0 + euclidean_norm(&pred);
            let eps = 1e-7 * scale;
            let mut jac = DMatrix::from_element(d, d, zero);
            for k in 0..d {
                let mut yk = pred.clone();
                yk[k] += eps;
                let fk = eval_checked(&mut rhs, &yk)?;
                for i in 0..d {
                    jac[(i, k)] = -(fk[i] - fp[i]) * (c / eps);
                }
                jac[(k, k)] += 1.0;
            }
            let lu = jac.lu();
            corr.copy_from_slice(&pred);
            let mut fc = fp;
            for _ in 0..NEWTON_ITERATIONS {
                let g = nalgebra::DVector::from_iterator(d, (0..d).map(|i| corr[i] - known[i] - fc[i] * c));
                let Some(step) = lu.solve(&g) else { break };
                for (y, s) in corr.iter_mut().zip(step.iter()) {
                    *y -= s;
                }
                fc = eval_checked(&mut rhs, &corr)?;
                let change = step.iter().map(|v| v.norm()).fold(0.0, f64::max);
                if !(change > 1e-14 * (1.0 + euclidean_norm(&corr))) {
                    break;
                }
            }
            if !(euclidean_norm(&corr) <= DIVERGENCE_CAP) {
                diverged_at = Some(n);
                break;
            }
            states.push(corr.clone());
            hist.extend(fc);
        }
    }
    let mut traj = Trajectory::new(*order, grid, states)?;
    traj.diverged_at = diverged_at;
    Ok(traj)
}

fn eval_checked<F>(rhs: &mut F, y: &[Complex64]) -> Result<Vec<Complex64>>
where
    F: FnMut(&[Complex64]) -> Result<Vec<Complex64>>,
{
    let v = rhs(y)?;
    if v.len() != y.len() {
        return Err(Error::Dimension(format!(
            "right-hand side returned {} components for a {}-dimensional state",
            v.len(),
            y.len()
        )));
    }
    Ok(v)
}

/// Simulates `D^{α,ρ}_C x = A x + f(x)`, `x(t0) = x0`.
pub fn simulate(
    a: &DMatrix<f64>,
    f: &dyn Nonlinearity,
    x0: &[f64],
    order: &FracOrder,
    horizon: f64,
    steps: usize,
) -> Result<Trajectory> {
    let d = x0.len();
    if a.nrows() != d || a.ncols() != d || f.dim() != d {
        return Err(Error::Dimension(format!(
            "A is {}x{}, f has dimension {}, x0 has {d} components",
            a.nrows(),
            a.ncols(),
            f.dim()
        )));
    }
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let y0: Vec<Complex64> = x0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    simulate_field(
        |x| {
            let mut out = f.eval(x)?;
            for (i, o) in out.iter_mut().enumerate() {
                for (j, xj) in x.iter().enumerate() {
                    *o += ac[(i, j)] * xj;
                }
            }
            Ok(out)
        },
        &y0,
        order,
        horizon,
        steps,
    )
}

/// Simulates the modal system `D y = Λ y + h(y)` from `y0`.
pub fn simulate_modal(ms: &ModalSystem, y0: &[Complex64], order: &FracOrder, horizon: f64, steps: usize) -> Result<Trajectory> {
    if y0.len() != ms.dim() {
        return Err(Error::Dimension(format!(
            "initial state has {} components, modal system has {}",
            y0.len(),
            ms.dim()
        )));
    }
    simulate_field(|y| ms.rhs(y), y0, order, horizon, steps)
}
