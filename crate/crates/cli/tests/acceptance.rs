//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p ckstab-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ckstab::dynamics::{euclidean_norm, simulate, simulate_modal, solve_linear_scalar};
use ckstab::fraccalc::{katugampola_integral, SampledFunction};
use ckstab::nonlinear::{LorenzG, Zero};
use ckstab::perron::{
    certify, estimate_c, lp_apply, picard_iterate, random_ball_trajectory, CertifyOptions, ContractionCertificate,
    LpOperator,
};
use ckstab::specfun::{
    mittag_leffler, real_gamma, stationary_kernel_abs, tail_constants, tail_sample_points, MLParams,
};
use ckstab::spectral::{modal_transform, sector_check, Verdict};
use ckstab::{FracOrder, WGrid};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn lorenz() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[-8.0, 8.0, 0.0, 26.0, -43.0, 0.0, 0.0, 0.0, -3.0])
}

fn lorenz_order() -> FracOrder {
    FracOrder::new(0.9, 1.2, 1.0).unwrap()
}

fn lorenz_certificate(r: f64) -> ContractionCertificate {
    certify(&lorenz(), Arc::new(LorenzG), &lorenz_order(), r, &CertifyOptions::default()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    check(elapsed <= limit, format!("{detail}; {:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()))
}

fn demo_lorenz() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_ckstab"))
        .arg("demo-lorenz")
        .env_remove("CKSTAB_OUT")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if out.status.code() != Some(0) {
        return Err(format!("exit status {:?}", out.status.code()));
    }
    let report = sector_check(&lorenz(), 0.9).map_err(|e| e.to_string())?;
    let mut got: Vec<f64> = report.eigenvalues.iter().map(|z| z.re).collect();
    got.sort_by(f64::total_cmp);
    let want = [-48.1771, -3.0, -2.8229];
    let err = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let imag = report.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let text = String::from_utf8_lossy(&out.stdout);
    if !text.contains("-2.8229") || !text.contains("-48.1771") {
        return Err("eigenvalues missing from output".into());
    }
    if err > 1e-3 || imag > 1e-3 || report.verdict != Verdict::Stable {
        return Err(format!("eigenvalue error {err:.1e}, verdict {}", report.verdict));
    }
    within(elapsed, Duration::from_secs(1), format!("eigenvalue error {err:.1e}, stable"))
}

fn power_rule() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for beta in [0.0, 0.5, 1.0, 2.0] {
        for alpha in [0.3, 0.9] {
            for rho in [0.5, 1.0, 1.2] {
                let order = FracOrder::new(alpha, rho, 1.0).unwrap();
                for t in [1.5, 2.0, 3.0] {
                    let g = WGrid::from_horizon(&order, t, 4096).unwrap();
                    let f = SampledFunction::from_fn(g, |w| w.powf(beta)).unwrap();
                    let out = katugampola_integral(&f, &order, alpha).unwrap();
                    let exact = real_gamma(beta + 1.0).unwrap() / real_gamma(alpha + beta + 1.0).unwrap()
                        * g.last().powf(alpha + beta);
                    worst = worst.max((out.values()[4096] - exact).abs() / exact);
                }
            }
        }
    }
    let detail = format!("max relative error {worst:.1e} at t in {{1.5,2,3}}, N=4096");
    if worst > 1e-5 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(30), detail)
}

fn semigroup_and_constant() -> Outcome {
    let order = FracOrder::new(0.3, 1.2, 1.0).unwrap();
    let g = WGrid::from_horizon(&order, 4.0, 4096).unwrap();
    let f = SampledFunction::from_fn(g, f64::sin).unwrap();
    let i3 = katugampola_integral(&f, &order, 0.3).unwrap();
    let i43 = katugampola_integral(&i3, &order, 0.4).unwrap();
    let i7 = katugampola_integral(&f, &order, 0.7).unwrap();
    let semi = i43.values().iter().zip(i7.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let order = FracOrder::new(0.4, 0.7, 2.0).unwrap();
    let g = WGrid::from_horizon(&order, 6.0, 256).unwrap();
    let f = SampledFunction::from_fn(g, |_| 3.0).unwrap();
    let out = katugampola_integral(&f, &order, 0.4).unwrap();
    let scale = 3.0 / real_gamma(1.4).unwrap();
    let constant = g
        .nodes()
        .zip(out.values())
        .map(|(w, v)| (v - scale * w.powf(0.4)).abs() / (1.0 + v.abs()))
        .fold(0.0, f64::max);
    check(semi <= 1e-4 && constant <= 1e-12, format!("semigroup {semi:.1e}, constant rule {constant:.1e}"))
}

fn ml_identities() -> Outcome {
    let start = Instant::now();
    let ml = |a: f64, b: f64, z: f64| mittag_leffler(MLParams::new(a, b).unwrap(), c(z)).unwrap().re;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for k in 0..80 {
        let x = -10.0 + 15.0 * k as f64 / 79.0;
        worst = worst.max((ml(1.0, 1.0, x) - x.exp()).abs() / x.exp());
        points += 1;
    }
    for k in 0..60 {
        let x = 5.0 * k as f64 / 59.0;
        // measured against max(|cos x|, 1e-3) so zeros of cos do not dominate
        worst = worst.max((ml(2.0, 1.0, -x * x) - x.cos()).abs() / x.cos().abs().max(1e-3));
        points += 1;
    }
    for k in 1..=60 {
        let x = -6.0 + 11.0 * k as f64 / 61.0;
        let want = x.exp_m1() / x;
        worst = worst.max((ml(1.0, 2.0, x) - want).abs() / want);
        points += 1;
    }
    let detail = format!("{points} points, max relative error {worst:.1e}");
    if worst > 1e-10 || points < 200 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(5), detail)
}

fn simulation_oracle() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut slowest): (f64, f64) = (0.0, f64::INFINITY);
    for lambda in [-0.5, -2.0] {
        for alpha in [0.4, 0.9] {
            for rho in [0.8, 1.0, 1.2] {
                let order = FracOrder::new(alpha, rho, 1.0).unwrap();
                let a = DMatrix::from_element(1, 1, lambda);
                let err = |n| {
                    let sim = simulate(&a, &Zero(1), &[1.0], &order, 11.0, n).unwrap();
                    let exact = solve_linear_scalar(c(lambda), c(1.0), None, &order, sim.grid).unwrap();
                    sim.sup_distance(&exact).unwrap()
                };
                let (e1, e2) = (err(1024), err(2048));
                worst = worst.max(e2);
                slowest = slowest.min((e1 / e2).log2());
            }
        }
    }
    let detail = format!("max error {worst:.1e} at N=2048, observed order >= {slowest:.2}");
    if worst > 1e-3 || slowest < 0.9 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(120), detail)
}

fn c_oracle() -> Outcome {
    let (mut oracle, mut invariance): (f64, f64) = (0.0, 0.0);
    for alpha in [0.5, 0.9] {
        for lambda in [-1.0, -2.8229, -3.0] {
            let plain = estimate_c(alpha, c(lambda), &FracOrder::new(alpha, 1.0, 1.0).unwrap()).unwrap();
            oracle = oracle.max((plain - 1.0 / lambda.abs()).abs());
            for (rho, t0) in [(1.2, 1.0), (0.6, 3.0)] {
                let other = estimate_c(alpha, c(lambda), &FracOrder::new(alpha, rho, t0).unwrap()).unwrap();
                invariance = invariance.max((plain - other).abs());
            }
        }
    }
    check(
        oracle <= 1e-3 && invariance <= 1e-10,
        format!("|C - 1/|λ|| <= {oracle:.1e}, ρ/t0 spread {invariance:.1e}"),
    )
}

fn tail_bound() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 0.9] {
        for lambda in [-1.0, -3.0] {
            let tb = tail_constants(alpha, c(lambda)).map_err(|e| e.to_string())?;
            for w in tail_sample_points(tb.t1).into_iter().skip(1) {
                let lhs = stationary_kernel_abs(alpha, c(lambda), w).unwrap();
                worst = worst.max(lhs / (tb.m / w.powf(alpha + 1.0)));
            }
        }
    }
    check(worst <= 1.0, format!("max |kernel| / bound = {worst:.3}"))
}

fn fixed_point_and_picard() -> Outcome {
    let start = Instant::now();
    let cert = lorenz_certificate(0.05);
    let o = lorenz_order();
    let ms = modal_transform(&lorenz(), Arc::new(LorenzG), cert.delta, None).map_err(|e| e.to_string())?;
    let x = vec![c(1e-3 / 3f64.sqrt()); 3];
    let sim = simulate_modal(&ms, &x, &o, 51.0, 2048).map_err(|e| e.to_string())?;
    let fixed = lp_apply(&ms, &x, &sim, &o).unwrap().sup_distance(&sim).unwrap();
    let picard = picard_iterate(&ms, &x, &o, sim.grid, 30, 1e-14, Some(&cert)).map_err(|e| e.to_string())?;
    let ratio = picard.ratios().into_iter().fold(0.0, f64::max);
    let detail = format!("‖Φ(x) - x‖ = {fixed:.1e}, max Picard ratio {ratio:.1e} (q = {:.3})", cert.q);
    if fixed > 1e-3 || ratio > cert.q + 0.1 || !picard.converged {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(120), detail)
}

fn lorenz_decay() -> Outcome {
    let o = lorenz_order();
    let tr = simulate(&lorenz(), &LorenzG, &[0.1, 0.1, 0.1], &o, 51.0, 8192).map_err(|e| e.to_string())?;
    let small = 1e-3 / 3f64.sqrt();
    let near = simulate(&lorenz(), &LorenzG, &[small; 3], &o, 51.0, 8192).map_err(|e| e.to_string())?;
    check(
        tr.diverged_at.is_none() && tr.final_norm() < 1e-2 && near.argmax_norm() == 0,
        format!("final norm {:.2e}, argmax of small solution at node {}", tr.final_norm(), near.argmax_norm()),
    )
}

fn certificate() -> Outcome {
    let cert = lorenz_certificate(0.05);
    if !(cert.valid && cert.q < 1.0 && cert.r_star > 0.0) {
        return Err(format!("r = 0.05: q = {}, r* = {}", cert.q, cert.r_star));
    }
    let o = lorenz_order();
    let ms = modal_transform(&lorenz(), Arc::new(LorenzG), cert.delta, None).map_err(|e| e.to_string())?;
    let grid = WGrid::from_horizon(&o, 21.0, 256).unwrap();
    let op = LpOperator::new(&ms, &o, grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..20 {
        let xi = random_ball_trajectory(&mut rng, &o, grid, 3, cert.r).unwrap();
        let eta = random_ball_trajectory(&mut rng, &o, grid, 3, cert.r).unwrap();
        let mut x: Vec<Complex64> =
            (0..3).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let scale = rng.random::<f64>() * cert.r_star / euclidean_norm(&x);
        x.iter_mut().for_each(|z| *z *= scale);
        let (a, b) = (op.apply(&x, &xi).unwrap(), op.apply(&x, &eta).unwrap());
        let contracts = a.sup_distance(&b).unwrap() <= (cert.q + 0.05) * xi.sup_distance(&eta).unwrap();
        let bounded = a.sup_norm <= cert.sup_e * euclidean_norm(&x) + cert.q * xi.sup_norm + 0.05;
        let inside = a.sup_norm <= cert.r * (1.0 + 1e-6);
        if !(contracts && bounded && inside) {
            return Err(format!("sampled inequality {i} fails"));
        }
    }
    let big = lorenz_certificate(1e3);
    check(
        !big.valid,
        format!("r = 0.05: q = {:.4}, r* = {:.4}; 20 sampled pairs hold; r = 1e3: q = {:.1}, invalid", cert.q, cert.r_star, big.q),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("demo-lorenz spectrum and runtime", demo_lorenz),
        ("power rule lattice", power_rule),
        ("semigroup and constant rule", semigroup_and_constant),
        ("Mittag-Leffler identities", ml_identities),
        ("simulation against closed form", simulation_oracle),
        ("kernel integral C", c_oracle),
        ("kernel tail bound", tail_bound),
        ("fixed point and Picard ratios", fixed_point_and_picard),
        ("Lorenz feedback decay", lorenz_decay),
        ("contraction certificate", certificate),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({detail}) [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
