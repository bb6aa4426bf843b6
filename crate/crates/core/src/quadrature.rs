//! Double-exponential (tanh-sinh) quadrature on finite intervals.
//!
//! Endpoint algebraic singularities are absorbed by the transform. Integrands
//! receive the abscissa together with its distances to both endpoints so that
//! power-type factors near an endpoint can be evaluated without cancellation.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Abscissa passed to the integrand: `x`, `x - a` and `b - x`.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    pub from_left: f64,
    pub from_right: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evals: usize,
    pub converged: bool,
}

const T_MAX: f64 = 6.5;
const MAX_LEVEL: u32 = 7;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    fn met(&self, err: f64, value: f64) -> bool {
        err <= self.rel * value || err <= self.abs
    }
}

fn node_weight(t: f64, a: f64, b: f64) -> Option<(Node, f64)> {
    let half = 0.5 * (b - a);
    let v = FRAC_PI_2 * t.sinh();
    let cosh_v = v.cosh();
    let w = half * FRAC_PI_2 * t.cosh() / (cosh_v * cosh_v);
    // distance to the nearer endpoint: (b - a) / (1 + e^{2|v|})
    let near = (b - a) / (1.0 + (2.0 * v.abs()).exp());
    if near <= 0.0 || !w.is_finite() || w == 0.0 {
        return None;
    }
    let node = if t < 0.0 {
        Node {
            x: a + near,
            from_left: near,
            from_right: (b - a) - near,
        }
    } else {
        Node {
            x: b - near,
            from_left: (b - a) - near,
            from_right: near,
        }
    };
    Some((node, w))
}

/// Tanh-sinh rule on `[a, b]`, refined by halving the step until two
/// successive levels agree to `tol`.
pub fn tanh_sinh<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult
where
    F: FnMut(Node) -> Complex64,
{
    if b <= a {
        return QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evals: 0,
            converged: true,
        };
    }
    let mut evals = 0usize;
    let mut eval = |t: f64, evals: &mut usize| -> Complex64 {
        match node_weight(t, a, b) {
            Some((node, w)) => {
                *evals += 1;
                f(node) * w
            }
            None => Complex64::new(0.0, 0.0),
        }
    };

    // Level 0 (step 1/2) also fixes how far each tail must extend: stop once
    // contributions are negligible or the abscissa hits the endpoint.
    let mut h = 0.5;
    let mut sum = eval(0.0, &mut evals);
    let mut limits = [T_MAX, T_MAX];
    for (side, sign) in [(0usize, -1.0), (1usize, 1.0)] {
        let mut k = 1;
        loop {
            let t = sign * h * k as f64;
            if t.abs() > T_MAX || node_weight(t, a, b).is_none() {
                limits[side] = t.abs() - h;
                break;
            }
            let term = eval(t, &mut evals);
            sum += term;
            if t.abs() >= 2.0 && term.norm() <= 1e-20 * sum.norm() {
                limits[side] = t.abs();
                break;
            }
            k += 1;
        }
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut t = h;
        while t <= limits[0].max(limits[1]) {
            if t <= limits[1] {
                sum += eval(t, &mut evals);
            }
            if t <= limits[0] {
                sum += eval(-t, &mut evals);
            }
            t += 2.0 * h;
        }
        let next = sum * h;
        error = (next - estimate).norm();
        estimate = next;
        if tol.met(error, estimate.norm()) {
            return QuadResult {
                value: estimate,
                error,
                evals,
                converged: true,
            };
        }
    }
    QuadResult {
        value: estimate,
        error,
        evals,
        converged: false,
    }
}

/// Tanh-sinh with recursive bisection of intervals that fail to converge.
/// Endpoint distances in [`Node`] always refer to the original `[a, b]`.
pub fn adaptive<F>(mut f: F, a: f64, b: f64, tol: Tolerance, max_depth: u32) -> QuadResult
where
    F: FnMut(Node) -> Complex64,
{
    adaptive_inner(&mut f, (a, b), a, b, tol, max_depth)
}

fn adaptive_inner<F>(f: &mut F, outer: (f64, f64), a: f64, b: f64, tol: Tolerance, depth: u32) -> QuadResult
where
    F: FnMut(Node) -> Complex64,
{
    let (a0, b0) = outer;
    let whole = tanh_sinh(
        |n: Node| {
            f(Node {
                x: n.x,
                from_left: if a == a0 { n.from_left } else { n.x - a0 },
                from_right: if b == b0 { n.from_right } else { b0 - n.x },
            })
        },
        a,
        b,
        tol,
    );
    if whole.converged || depth == 0 {
        return whole;
    }
    let m = 0.5 * (a + b);
    let sub_tol = Tolerance::new(tol.rel, 0.5 * tol.abs);
    let left = adaptive_inner(f, outer, a, m, sub_tol, depth - 1);
    let right = adaptive_inner(f, outer, m, b, sub_tol, depth - 1);
    QuadResult {
        value: left.value + right.value,
        error: left.error + right.error,
        evals: whole.evals + left.evals + right.evals,
        converged: left.converged && right.converged,
    }
}
