use std::f64::consts::{PI, TAU};

use grainflow::diagnostics::{
    self, asymptotics_report, decay_fit, dissipation_residual, length_dissipation_check, max_residual,
    monotonicity_series, observed_order, tail_window, AsymptoticStatus, Tolerances, WeightFunction,
};
use grainflow::graph_solver::{self, Params, TimeStep};
use grainflow::{Grid1D, SigmaModel, Trajectory};

fn run(n: usize, u0: impl Fn(f64) -> f64, alpha0: f64, model: &SigmaModel, params: Params) -> Trajectory {
    let grid = Grid1D::new(n).unwrap();
    graph_solver::run(grid.sample(u0), alpha0, grid, &params, model, 1).unwrap()
}

fn ladder_run(n: usize, dt: f64, t_end: f64) -> Trajectory {
    let p = Params {
        dt: TimeStep::Fixed(dt),
        t_end,
        ..Params::default()
    };
    run(n, |x| 0.2 * (TAU * x).sin(), 1.0, &SigmaModel::quadratic_shifted(), p)
}

#[test]
fn dissipation_identity_and_refinement() {
    let tol = Tolerances::default();
    let coarse_dt = 0.5 / (256.0 * 256.0) / 1.5;
    let coarse = ladder_run(256, coarse_dt, 0.01);
    let (series, report) = dissipation_residual(&coarse, &tol).unwrap();
    let scale = series.iter().map(|s| s.lhs.abs()).fold(0.0, f64::max);
    eprintln!("dissipation: max residual {:e}, scale {scale:e}", max_residual(&series));
    assert!(report.passed, "{report:?}");

    let fine = ladder_run(512, coarse_dt / 4.0, 0.01);
    let (fine_series, _) = dissipation_residual(&fine, &tol).unwrap();
    let order = observed_order(max_residual(&series), max_residual(&fine_series), 2.0);
    eprintln!("dissipation order {order}");
    assert!(order >= 1.5, "{order}");
}

#[test]
fn forced_huge_step_fails_dissipation() {
    let p = Params {
        dt: TimeStep::Fixed(1e-2),
        force_dt: true,
        t_end: 0.1,
        ..Params::default()
    };
    let traj = run(64, |x| 0.2 * (TAU * x).sin(), 1.0, &SigmaModel::quadratic_shifted(), p);
    let (_, report) = dissipation_residual(&traj, &Tolerances::default()).unwrap();
    assert!(!report.passed, "{report:?}");
}

#[test]
fn weighted_monotonicity_on_sine() {
    let m = SigmaModel::quadratic_shifted();
    let p = Params {
        t_end: 0.01,
        ..Params::default()
    };
    let traj = run(256, |x| 0.3 * (TAU * x).sin(), 1.0, &m, p);
    let t0 = traj.last().t;
    for f in [WeightFunction::AreaElement, WeightFunction::One] {
        let (series, report) = monotonicity_series(&traj, &m, 0.5, t0, f, 2.0, &Tolerances::default()).unwrap();
        eprintln!("{f:?}: {} samples, worst {:e} tol {:e}", series.len(), report.worst_violation, report.tolerance);
        assert!(report.passed, "{report:?}");
        assert!(series.len() > 100);
    }
}

#[test]
fn constant_sigma_monotonicity_matches_classical() {
    // σ ≡ 1 reduces to the classical monotone quantity.
    let m = SigmaModel::constant(1.0).unwrap();
    let p = Params {
        t_end: 0.01,
        ..Params::default()
    };
    let traj = run(128, |x| 0.2 * (TAU * x).cos() + 0.05 * (2.0 * TAU * x).sin(), 0.0, &m, p);
    let (_, report) =
        monotonicity_series(&traj, &m, 0.3, traj.last().t, WeightFunction::One, 2.0, &Tolerances::default()).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn length_dissipation_small_sine() {
    let m = SigmaModel::constant(1.0).unwrap();
    let p = Params {
        t_end: 0.01,
        ..Params::default()
    };
    let coarse = run(256, |x| 0.1 * (TAU * x).sin(), 0.0, &m, p);
    let (series, report) = length_dissipation_check(&coarse, &m, &p, &Tolerances::default()).unwrap();
    let r_coarse = max_residual(&series);
    eprintln!("length dissipation residual {r_coarse:e}");
    assert!(report.passed, "{report:?}");
    assert!(r_coarse <= 1e-4);

    let fine = run(512, |x| 0.1 * (TAU * x).sin(), 0.0, &m, p);
    let (fine_series, _) = length_dissipation_check(&fine, &m, &p, &Tolerances::default()).unwrap();
    let order = observed_order(r_coarse, max_residual(&fine_series), 2.0);
    eprintln!("length dissipation order {order}");
    assert!(order >= 1.5);
}

#[test]
fn bounds_on_randomized_sines() {
    let m = SigmaModel::quadratic_shifted();
    let p = Params {
        t_end: 0.005,
        ..Params::default()
    };
    let tol = Tolerances::default();
    let mut seed = 12345u64;
    let mut next = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..20 {
        let (a, k, b, alpha0) = (2.0 * next(), 1 + (3.0 * next()) as usize % 3, next() - 0.5, 4.0 * next() - 2.0);
        let traj = run(64, |x| a * (TAU * k as f64 * x).sin() + b, alpha0, &m, p);
        for r in diagnostics::bound_checks(&traj, &m, &tol) {
            assert!(r.passed, "a={a} k={k} b={b}: {r:?}");
        }
    }
}

#[test]
fn decay_rates_of_small_sine() {
    let m = SigmaModel::constant(1.0).unwrap();
    let p = Params {
        t_end: 0.1,
        ..Params::default()
    };
    let traj = run(128, |x| 0.1 * (TAU * x).sin(), 0.0, &m, p);
    let pick = |f: fn(&graph_solver::DiagnosticsRow) -> f64| -> Vec<(f64, f64)> {
        traj.rows.iter().map(|r| (r.t, f(r))).collect()
    };
    let mut rates = Vec::new();
    for (name, series) in [
        ("h1", pick(|r| r.h1)),
        ("h2", pick(|r| r.h2)),
        ("h3", pick(|r| r.h3)),
        ("sup_kappa", pick(|r| r.sup_kappa)),
    ] {
        let fit = decay_fit(&series, tail_window(&series)).unwrap();
        eprintln!("{name}: rate {} r2 {}", fit.rate, fit.r_squared);
        assert!(fit.rate > 0.0 && fit.r_squared >= 0.99);
        rates.push(fit.rate);
    }
    let floor = 0.9 * 2.0 * TAU * TAU / (1.0 + (0.2 * PI).powi(2));
    assert!(rates[0] >= floor);

    let small = run(128, |x| 1e-3 * (TAU * x).sin(), 0.0, &m, p);
    let series: Vec<(f64, f64)> = small.rows.iter().map(|r| (r.t, r.h1)).collect();
    let fit = decay_fit(&series, tail_window(&series)).unwrap();
    let predicted = 2.0 * TAU * TAU;
    eprintln!("linearized h1 rate {} vs {predicted}", fit.rate);
    assert!((fit.rate / predicted - 1.0).abs() <= 0.15);
}

#[test]
fn degenerate_alpha_decay_rate() {
    let m = SigmaModel::quadratic();
    let p = Params {
        t_end: 0.5,
        ..Params::default()
    };
    let traj = run(64, |x| 0.2 * (TAU * x).sin(), 1.0, &m, p);
    let mut integral = 0.0;
    for w in traj.rows.windows(2) {
        integral += 0.5 * (w[0].length + w[1].length) * (w[1].t - w[0].t);
        assert!((w[1].alpha / (-integral).exp() - 1.0).abs() <= 1e-4);
    }
    let series: Vec<(f64, f64)> = traj.rows.iter().map(|r| (r.t, r.alpha)).collect();
    let fit = decay_fit(&series, tail_window(&series)).unwrap();
    assert!(fit.rate >= 0.99, "{}", fit.rate);
}

#[test]
fn shifted_sine_converges_to_a_constant() {
    let m = SigmaModel::quadratic_shifted();
    let p = Params {
        t_end: 0.5,
        ..Params::default()
    };
    let grid = Grid1D::new(256).unwrap();
    let traj =
        graph_solver::run(grid.sample(|x| 0.3 * (TAU * x).sin() + 0.7), 1.0, grid, &p, &m, 1000).unwrap();
    let report = asymptotics_report(&traj);
    eprintln!("{report:?}");
    assert_eq!(report.status, AsymptoticStatus::Converged);
    assert!((report.u_infinity - 0.7).abs() < 0.01);
    assert!(report.spread <= 1e-6);
    let fit = report.kappa_fit.unwrap();
    assert!(fit.rate > 0.0 && fit.r_squared >= 0.99);
}
