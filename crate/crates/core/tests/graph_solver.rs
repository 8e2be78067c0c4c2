use std::f64::consts::TAU;

use grainflow::geometry::Grid1D;
use grainflow::graph_solver::{self, Params, TimeStep};
use grainflow::{GraphState, SigmaModel};

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// Method-of-lines right side written directly from the stencils, independent
// of the solver's linear algebra.
fn mol_rhs(u: &[f64], alpha: f64, grid: &Grid1D, mu: f64, gamma: f64, m: &SigmaModel) -> (Vec<f64>, f64) {
    let n = u.len();
    let dx = grid.dx();
    let mut du = vec![0.0; n];
    let mut length = 0.0;
    for i in 0..n {
        let (l, r) = (u[(i + n - 1) % n], u[(i + 1) % n]);
        let ux = (r - l) / (2.0 * dx);
        let uxx = (r - 2.0 * u[i] + l) / (dx * dx);
        du[i] = mu * m.eval(alpha) * uxx / (1.0 + ux * ux);
        length += (1.0 + ux * ux).sqrt() * dx;
    }
    (du, -gamma * m.deriv(alpha) * length)
}

fn rk4(u0: &[f64], alpha0: f64, grid: &Grid1D, h: f64, steps: usize, m: &SigmaModel) -> (Vec<f64>, f64) {
    let (mu, gamma) = (1.0, 1.0);
    let mut u = u0.to_vec();
    let mut a = alpha0;
    let axpy = |u: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        u.iter().zip(k).map(|(x, y)| x + s * y).collect()
    };
    for _ in 0..steps {
        let (k1, l1) = mol_rhs(&u, a, grid, mu, gamma, m);
        let (k2, l2) = mol_rhs(&axpy(&u, &k1, h / 2.0), a + h / 2.0 * l1, grid, mu, gamma, m);
        let (k3, l3) = mol_rhs(&axpy(&u, &k2, h / 2.0), a + h / 2.0 * l2, grid, mu, gamma, m);
        let (k4, l4) = mol_rhs(&axpy(&u, &k3, h), a + h * l3, grid, mu, gamma, m);
        for i in 0..u.len() {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        a += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }
    (u, a)
}

#[test]
fn one_step_matches_fine_rk4_method_of_lines() {
    let grid = Grid1D::new(128).unwrap();
    let m = SigmaModel::quadratic_shifted();
    let u0 = grid.sample(|x| 0.1 * (TAU * x).sin());
    let state = GraphState::new(grid, u0.clone(), 0.0, 0.0).unwrap();
    let dt = 1e-4;
    let next = graph_solver::step(&state, dt, &Params::default(), &m, 1).unwrap();
    let (u_ref, a_ref) = rk4(&u0, 0.0, &grid, 1e-6, 100, &m);
    let err = max_diff(&next.u, &u_ref);
    assert!(err <= 1e-6, "max-norm error {err:e}");
    assert!((next.alpha - a_ref).abs() < 1e-15);
}

#[test]
fn explicit_solution_misorientation_decay() {
    let grid = Grid1D::new(32).unwrap();
    let m = SigmaModel::quadratic_shifted();
    let p = Params {
        dt: TimeStep::Fixed(1e-4),
        t_end: 1.0,
        ..Params::default()
    };
    let traj = graph_solver::run(vec![0.0; 32], 1.0, grid, &p, &m, 1000).unwrap();
    let a = traj.last().alpha;
    assert!((a - (-1.0f64).exp()).abs() <= 1e-6, "{a}");
    assert!(traj.last().u.iter().all(|&x| x.abs() <= 1e-13));
}

#[test]
fn length_is_non_increasing_for_sine() {
    let grid = Grid1D::new(64).unwrap();
    let m = SigmaModel::quadratic_shifted();
    let p = Params {
        t_end: 0.05,
        ..Params::default()
    };
    let traj = graph_solver::run(grid.sample(|x| (TAU * x).sin()), 0.0, grid, &p, &m, 100).unwrap();
    for w in traj.rows.windows(2) {
        assert!(w[1].length <= w[0].length + 1e-12, "{} > {}", w[1].length, w[0].length);
    }
}

#[test]
fn maximum_principle_and_misorientation_bound() {
    let grid = Grid1D::new(64).unwrap();
    let m = SigmaModel::quadratic_shifted();
    let p = Params {
        t_end: 0.02,
        gamma: 3.0,
        ..Params::default()
    };
    let u0 = grid.sample(|x| 0.7 * (TAU * x).sin() + 0.2 * (3.0 * TAU * x).cos());
    let sup0 = u0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let traj = graph_solver::run(u0, -2.0, grid, &p, &m, 50).unwrap();
    for r in &traj.rows {
        assert!(r.sup_u <= sup0 + 1e-10);
        assert!(r.alpha.abs() <= 2.0 + 1e-12);
    }
}

#[test]
fn energy_descends_within_slack() {
    let grid = Grid1D::new(64).unwrap();
    let m = SigmaModel::quadratic_shifted();
    let p = Params {
        t_end: 0.02,
        ..Params::default()
    };
    let traj = graph_solver::run(grid.sample(|x| 0.4 * (TAU * x).sin()), 1.5, grid, &p, &m, 50).unwrap();
    let slack = 1e-3 * traj.dt * traj.rows[0].energy;
    for w in traj.rows.windows(2) {
        assert!(w[1].energy <= w[0].energy + slack);
    }
}

#[test]
fn degenerate_density_alpha_matches_length_integral() {
    let grid = Grid1D::new(64).unwrap();
    let m = SigmaModel::quadratic();
    let p = Params {
        t_end: 0.2,
        gamma: 2.0,
        ..Params::default()
    };
    let traj = graph_solver::run(grid.sample(|x| 0.2 * (TAU * x).sin()), 1.0, grid, &p, &m, 100).unwrap();
    let mut integral = 0.0;
    for w in traj.rows.windows(2) {
        integral += 0.5 * (w[0].length + w[1].length) * (w[1].t - w[0].t);
        let expected = (-2.0 * integral).exp();
        assert!((w[1].alpha / expected - 1.0).abs() <= 1e-4);
    }
}

#[test]
fn refinement_ladder_self_convergence() {
    // dt shrinks by 4 per level with the grid refined by 2, so the scheme's
    // O(dt + dx²) error should drop by ~4 per level.
    let m = SigmaModel::quadratic_shifted();
    let t_end = 0.01;
    let solve = |n: usize| {
        let grid = Grid1D::new(n).unwrap();
        let dx = grid.dx();
        let p = Params {
            dt: TimeStep::Fixed(0.25 * dx * dx),
            t_end,
            ..Params::default()
        };
        let traj = graph_solver::run(grid.sample(|x| 0.1 * (TAU * x).sin()), 0.5, grid, &p, &m, usize::MAX).unwrap();
        traj.last().u.clone()
    };
    let (u64_, u128, u256, u512) = (solve(64), solve(128), solve(256), solve(512));
    let restrict = |fine: &[f64], factor: usize| -> Vec<f64> { fine.iter().step_by(factor).cloned().collect() };
    let e1 = max_diff(&u64_, &restrict(&u512, 8));
    let e2 = max_diff(&restrict(&u128, 2), &restrict(&u512, 8));
    let e3 = max_diff(&restrict(&u256, 4), &restrict(&u512, 8));
    // Richardson-style: differences against the finest level.
    let order = ((e1 - e2) / (e2 - e3)).log2();
    assert!((1.8..=2.2).contains(&order), "order {order} ({e1:e}, {e2:e}, {e3:e})");
}

#[test]
fn time_only_refinement_is_second_order() {
    let grid = Grid1D::new(64).unwrap();
    let m = SigmaModel::quadratic_shifted();
    let base = 2e-4;
    let solve = |dt: f64| {
        let p = Params {
            dt: TimeStep::Fixed(dt),
            t_end: 0.02,
            force_dt: true,
            ..Params::default()
        };
        graph_solver::run(grid.sample(|x| 0.1 * (TAU * x).sin()), 0.5, grid, &p, &m, usize::MAX)
            .unwrap()
            .last()
            .u
            .clone()
    };
    let reference = solve(base / 8.0);
    let e1 = max_diff(&solve(base), &reference);
    let e2 = max_diff(&solve(base / 2.0), &reference);
    let order = (e1 / e2).log2();
    assert!(order >= 1.8, "order {order}");
}
