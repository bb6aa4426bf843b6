use ckstab::fraccalc::{ck_derivative, katugampola_integral, SampledFunction, WGrid};
use ckstab::specfun::real_gamma;
use ckstab::{Error, FracOrder};

fn grid(order: &FracOrder, horizon: f64, n: usize) -> WGrid {
    WGrid::from_horizon(order, horizon, n).unwrap()
}

/// Relative error of the N-node quadrature of `I^{α,ρ}[W^β]` at `t`, the
/// grid ending at `t`.
fn power_rule_error_at(alpha: f64, beta: f64, rho: f64, t: f64, n: usize) -> f64 {
    let order = FracOrder::new(alpha, rho, 1.0).unwrap();
    let g = grid(&order, t, n);
    let f = SampledFunction::from_fn(g, |w| w.powf(beta)).unwrap();
    let out = katugampola_integral(&f, &order, alpha).unwrap();
    let c = real_gamma(beta + 1.0).unwrap() / real_gamma(alpha + beta + 1.0).unwrap();
    let exact = c * g.last().powf(beta + alpha);
    (out.values()[n] - exact).abs() / exact
}

fn power_rule_error(alpha: f64, beta: f64, rho: f64, n: usize) -> f64 {
    [1.5, 2.0, 3.0]
        .iter()
        .map(|&t| power_rule_error_at(alpha, beta, rho, t, n))
        .fold(0.0, f64::max)
}

#[test]
fn power_rule_lattice() {
    for beta in [0.0, 0.5, 1.0, 2.0] {
        for alpha in [0.3, 0.9] {
            for rho in [0.5, 1.0, 1.2] {
                let e = power_rule_error(alpha, beta, rho, 4096);
                assert!(e <= 1e-5, "β={beta} α={alpha} ρ={rho}: {e:e}");
            }
        }
    }
}

#[test]
fn constant_integral_example() {
    let order = FracOrder::new(0.4, 0.7, 2.0).unwrap();
    let g = grid(&order, 6.0, 256);
    let f = SampledFunction::from_fn(g, |_| 3.0).unwrap();
    let out = katugampola_integral(&f, &order, 0.4).unwrap();
    let scale = 3.0 / real_gamma(1.4).unwrap();
    for (w, v) in g.nodes().zip(out.values()) {
        assert!((v - scale * w.powf(0.4)).abs() <= 1e-13 * (1.0 + v.abs()));
    }
}

#[test]
fn semigroup() {
    let order = FracOrder::new(0.3, 1.2, 1.0).unwrap();
    let mut errs = Vec::new();
    for n in [1024, 4096] {
        let g = grid(&order, 4.0, n);
        let f = SampledFunction::from_fn(g, f64::sin).unwrap();
        let i3 = katugampola_integral(&f, &order, 0.3).unwrap();
        let i43 = katugampola_integral(&i3, &order, 0.4).unwrap();
        let i7 = katugampola_integral(&f, &order, 0.7).unwrap();
        errs.push(
            i43.values()
                .iter()
                .zip(i7.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    assert!(errs[1] <= 1e-4, "{errs:?}");
    assert!(errs[1] < errs[0], "{errs:?}");
}

#[test]
fn constant_has_zero_caputo_derivative() {
    for rho in [0.5, 1.0, 1.2] {
        let order = FracOrder::new(0.6, rho, 1.0).unwrap();
        let g = grid(&order, 5.0, 4096);
        let f = SampledFunction::from_fn(g, |_| 5.0).unwrap();
        let d = ck_derivative(&f, &order, true).unwrap();
        assert!(d.values().iter().all(|v| v.abs() <= 1e-12));
    }
}

#[test]
fn non_caputo_derivative_of_constant() {
    let order = FracOrder::new(0.6, 1.2, 1.0).unwrap();
    let g = grid(&order, 5.0, 512);
    let f = SampledFunction::from_fn(g, |_| 5.0).unwrap();
    let d = ck_derivative(&f, &order, false).unwrap();
    let c = 5.0 / real_gamma(0.4).unwrap();
    for (w, v) in g.nodes().zip(d.values()).skip(1) {
        assert!((v - c * w.powf(-0.6)).abs() <= 1e-12 * v.abs());
    }
}

#[test]
fn derivative_power_rule_and_inversion() {
    let order = FracOrder::new(0.6, 1.2, 1.0).unwrap();
    let g = grid(&order, 3.0, 4096);
    let f = SampledFunction::from_fn(g, |w| w.powf(1.3)).unwrap();
    let d = ck_derivative(&f, &order, true).unwrap();
    let c = real_gamma(2.3).unwrap() / real_gamma(1.7).unwrap();
    let worst = g
        .nodes()
        .zip(d.values())
        .skip(1)
        .map(|(w, v)| (v - c * w.powf(0.7)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-2, "{worst:e}");
    assert!(d.extrapolated_head);

    let back = katugampola_integral(&d, &order, 0.6).unwrap();
    let err = g
        .nodes()
        .zip(back.values())
        .map(|(w, v)| (v - w.powf(1.3)).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-3, "{err:e}");
}

#[test]
fn inversion_of_smooth_function() {
    let order = FracOrder::new(0.5, 0.8, 1.0).unwrap();
    let g = grid(&order, 4.0, 4096);
    let f = SampledFunction::from_fn(g, |w| (2.0 * w).cos() + w).unwrap();
    let d = ck_derivative(&f, &order, true).unwrap();
    let back = katugampola_integral(&d, &order, 0.5).unwrap();
    let f0 = f.values()[0];
    let err = f
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - f0 - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-3, "{err:e}");
}

#[test]
fn derivative_is_linear() {
    let order = FracOrder::new(0.35, 1.2, 1.0).unwrap();
    let g = grid(&order, 3.0, 1024);
    let f = SampledFunction::from_fn(g, |w| w.sin()).unwrap();
    let h = SampledFunction::from_fn(g, |w| w * w - 1.0).unwrap();
    let lhs = ck_derivative(&f.combine(2.0, &h, 3.0).unwrap(), &order, true).unwrap();
    let df = ck_derivative(&f, &order, true).unwrap();
    let dh = ck_derivative(&h, &order, true).unwrap();
    for ((l, a), b) in lhs.values().iter().zip(df.values()).zip(dh.values()) {
        assert!((l - (2.0 * a + 3.0 * b)).abs() <= 1e-12 * (1.0 + l.abs()));
    }
}

#[test]
fn rho_one_matches_shifted_classical_time() {
    let order = FracOrder::new(0.9, 1.0, 2.0).unwrap();
    let g = grid(&order, 5.0, 300);
    let times = g.times(&order);
    assert!((times[0] - 2.0).abs() < 1e-15 && (times[300] - 5.0).abs() < 1e-12);
    for (k, t) in times.iter().enumerate() {
        assert!((t - 2.0 - g.w(k)).abs() <= 1e-13);
    }
}

#[test]
fn integral_converges_at_least_first_order() {
    let ns = [256, 512, 1024, 2048];
    for (alpha, beta) in [(0.3, 0.5), (0.9, 0.5), (0.5, 2.0)] {
        let errs: Vec<f64> = ns.iter().map(|&n| power_rule_error(alpha, beta, 1.2, n)).collect();
        let slope = (errs[0] / errs[3]).log2() / 3.0;
        assert!(slope >= 1.0, "α={alpha} β={beta}: {errs:?} slope {slope}");
    }
}

#[test]
fn integer_powers_are_exact_at_every_node() {
    for beta in [0.0, 1.0] {
        let order = FracOrder::new(0.3, 1.2, 1.0).unwrap();
        let g = grid(&order, 3.0, 512);
        let f = SampledFunction::from_fn(g, |w| w.powf(beta)).unwrap();
        let out = katugampola_integral(&f, &order, 0.3).unwrap();
        let c = real_gamma(beta + 1.0).unwrap() / real_gamma(beta + 1.3).unwrap();
        for (w, v) in g.nodes().zip(out.values()).skip(1) {
            assert!((v - c * w.powf(beta + 0.3)).abs() <= 1e-12 * v.abs());
        }
    }
}

#[test]
fn invalid_inputs() {
    let order = FracOrder::new(0.5, 1.0, 1.0).unwrap();
    let g = grid(&order, 2.0, 8);
    let f = SampledFunction::from_fn(g, |w| w).unwrap();
    assert!(matches!(katugampola_integral(&f, &order, 0.0), Err(Error::Order(_))));
    let high = FracOrder::new(1.5, 1.0, 1.0).unwrap();
    assert!(matches!(ck_derivative(&f, &high, true), Err(Error::Order(_))));
    assert!(matches!(WGrid::from_horizon(&order, 0.5, 8), Err(Error::Grid(_))));
    assert!(SampledFunction::new(g, vec![1.0; 3]).is_err());
    assert!(SampledFunction::new(g, vec![f64::NAN; 9]).is_err());
}
