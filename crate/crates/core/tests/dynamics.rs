use ckstab::dynamics::{simulate, solve_linear_scalar, Trajectory};
use ckstab::nonlinear::{LorenzG, Zero};
use ckstab::{Error, FracOrder, WGrid};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn lorenz_closed_loop() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[-8.0, 8.0, 0.0, 26.0, -43.0, 0.0, 0.0, 0.0, -3.0])
}

fn scalar_error(lambda: f64, order: &FracOrder, horizon: f64, n: usize) -> f64 {
    let a = DMatrix::from_element(1, 1, lambda);
    let sim = simulate(&a, &Zero(1), &[1.0], order, horizon, n).unwrap();
    let exact = solve_linear_scalar(c(lambda), c(1.0), None, order, sim.grid).unwrap();
    sim.sup_distance(&exact).unwrap()
}

#[test]
fn closed_form_oracle_lattice() {
    for lambda in [-0.5, -2.0] {
        for alpha in [0.4, 0.9] {
            for rho in [0.8, 1.0, 1.2] {
                let order = FracOrder::new(alpha, rho, 1.0).unwrap();
                let e1 = scalar_error(lambda, &order, 11.0, 1024);
                let e2 = scalar_error(lambda, &order, 11.0, 2048);
                let slope = (e1 / e2).log2();
                assert!(e2 <= 1e-3, "λ={lambda} α={alpha} ρ={rho}: {e2:e}");
                assert!(slope >= 0.9, "λ={lambda} α={alpha} ρ={rho}: order {slope}");
            }
        }
    }
}

#[test]
fn scalar_example_at_fine_resolution() {
    let order = FracOrder::new(0.9, 1.2, 1.0).unwrap();
    assert!(scalar_error(-1.0, &order, 3.0, 4096) <= 1e-4);
}

// 40-digit series evaluation of E_0.9(-W^0.9), W = (3^1.2 - 1)/1.2.
#[test]
fn frozen_linear_solution() {
    let order = FracOrder::new(0.9, 1.2, 1.0).unwrap();
    let grid = WGrid::from_horizon(&order, 3.0, 8).unwrap();
    let u = solve_linear_scalar(c(-1.0), c(1.0), None, &order, grid).unwrap();
    let last = u.states.last().unwrap()[0];
    assert!((last.re - 0.151_767_677_838_836_44).abs() < 1e-12 && last.im == 0.0);
    assert!((u.t_nodes[8] - 3.0).abs() < 1e-12);
}

#[test]
fn time_nodes_hit_both_endpoints() {
    for (rho, t0, horizon) in [(1.2, 1.0, 51.0), (0.5, 2.0, 3.0), (1.0, 0.1, 7.3)] {
        let order = FracOrder::new(0.9, rho, t0).unwrap();
        let tr = simulate(&DMatrix::zeros(1, 1), &Zero(1), &[0.0], &order, horizon, 1000).unwrap();
        assert!((tr.t_nodes[0] - t0).abs() <= 1e-12);
        assert!((tr.t_nodes[1000] - horizon).abs() <= 1e-12 * horizon);
        assert!(tr.t_nodes.windows(2).all(|p| p[0] < p[1]));
    }
}

#[test]
fn rho_one_depends_only_on_elapsed_time() {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, -2.0, -1.0]);
    let first = simulate(&a, &Zero(2), &[1.0, 0.5], &FracOrder::new(0.8, 1.0, 1.0).unwrap(), 5.0, 256).unwrap();
    let shifted = simulate(&a, &Zero(2), &[1.0, 0.5], &FracOrder::new(0.8, 1.0, 3.0).unwrap(), 7.0, 256).unwrap();
    assert_eq!(first.states, shifted.states);
}

#[test]
fn constant_without_dynamics() {
    let order = FracOrder::new(0.6, 1.2, 1.0).unwrap();
    let tr = simulate(&DMatrix::zeros(3, 3), &Zero(3), &[1.0, -2.0, 0.5], &order, 10.0, 64).unwrap();
    assert!(tr.states.iter().all(|s| s == &vec![c(1.0), c(-2.0), c(0.5)]));
}

#[test]
fn lorenz_feedback_decays() {
    let order = FracOrder::new(0.9, 1.2, 1.0).unwrap();
    let tr = simulate(&lorenz_closed_loop(), &LorenzG, &[0.1, 0.1, 0.1], &order, 51.0, 8192).unwrap();
    assert!(tr.diverged_at.is_none());
    assert!(tr.final_norm() < 1e-2, "{}", tr.final_norm());
    assert!(tr.states.iter().flatten().all(|z| z.im == 0.0));
}

#[test]
fn small_data_scale_linearly() {
    let order = FracOrder::new(0.9, 1.2, 1.0).unwrap();
    let run = |s: f64| -> Trajectory {
        simulate(&lorenz_closed_loop(), &LorenzG, &[s, s, s], &order, 51.0, 4096).unwrap()
    };
    let x0 = 1e-3 / 3f64.sqrt();
    let (full, half) = (run(x0), run(0.5 * x0));
    assert_eq!(full.argmax_norm(), 0);
    assert_eq!(half.argmax_norm(), 0);
    let ratio = half.sup_norm / full.sup_norm;
    assert!((ratio / 0.5 - 1.0).abs() <= 0.1, "{ratio}");
    for (a, b) in full.norms().iter().zip(half.norms()) {
        assert!((b - 0.5 * a).abs() <= 0.1 * 0.5 * a + 1e-15);
    }
}

#[test]
fn blow_up_is_reported() {
    let order = FracOrder::new(0.8, 1.0, 1.0).unwrap();
    let f = ckstab::nonlinear::Polynomial::new(
        1,
        vec![ckstab::nonlinear::PolyTerm { component: 0, coeff: 1.0, exponents: vec![3] }],
    )
    .unwrap();
    let tr = simulate(&DMatrix::zeros(1, 1), &f, &[3.0], &order, 10.0, 512).unwrap();
    let k = tr.diverged_at.expect("cubic growth blows up");
    assert_eq!(tr.len(), k);
    assert!(tr.sup_norm <= 1e8);
}

#[test]
fn rejects_bad_requests() {
    let order = FracOrder::new(0.8, 1.0, 1.0).unwrap();
    let a = DMatrix::from_element(1, 1, -1.0);
    assert!(matches!(simulate(&a, &Zero(1), &[1.0], &order, 5.0, 8), Err(Error::Steps(_))));
    assert!(matches!(simulate(&a, &Zero(2), &[1.0], &order, 5.0, 64), Err(Error::Dimension(_))));
    assert!(matches!(simulate(&a, &Zero(1), &[1.0], &order, 0.5, 64), Err(Error::Grid(_))));
}
