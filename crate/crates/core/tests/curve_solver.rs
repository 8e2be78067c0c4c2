use std::f64::consts::{PI, TAU};

use grainflow::curve_solver::{
    self, line_tension_residual, polygon_geometry, run_curve, CurveEnergy, CurveRunOptions, CurveState,
    CurveStatus,
};
use grainflow::{AnisotropicSigma, Params, SigmaModel, TimeStep};

fn shifted() -> CurveEnergy {
    CurveEnergy::Isotropic(SigmaModel::quadratic_shifted())
}

fn params(t_end: f64) -> Params {
    Params {
        t_end,
        ..Params::default()
    }
}

// r' = -μσ(α)/r, α' = -γσ'(α)·2πr with RK4.
fn circle_oracle(r0: f64, alpha0: f64, mu: f64, gamma: f64, h: f64, t_end: f64) -> Vec<(f64, f64)> {
    let m = SigmaModel::quadratic_shifted();
    let f = |r: f64, a: f64| (-mu * m.eval(a) / r, -gamma * m.deriv(a) * TAU * r);
    let (mut r, mut a, mut t) = (r0, alpha0, 0.0);
    let mut out = vec![(t, r)];
    while t < t_end && r > 0.15 {
        let (k1, l1) = f(r, a);
        let (k2, l2) = f(r + 0.5 * h * k1, a + 0.5 * h * l1);
        let (k3, l3) = f(r + 0.5 * h * k2, a + 0.5 * h * l2);
        let (k4, l4) = f(r + h * k3, a + h * l3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        a += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        t += h;
        out.push((t, r));
    }
    out
}

fn interpolate(series: &[(f64, f64)], t: f64) -> f64 {
    let i = series.partition_point(|&(s, _)| s < t).clamp(1, series.len() - 1);
    let ((t0, r0), (t1, r1)) = (series[i - 1], series[i]);
    r0 + (t - t0) / (t1 - t0) * (r1 - r0)
}

#[test]
fn shrinking_circle_extinction() {
    let c = CurveState::circle([0.0, 0.0], 1.0, 256, 0.0).unwrap();
    let (traj, report) = run_curve(c, &params(1.0), &shifted(), &CurveRunOptions::default()).unwrap();
    assert_eq!(report.status, CurveStatus::Extinct);
    let te = report.extinction_time().unwrap();
    assert!((te - 0.5).abs() <= 0.01, "{te}");
    for row in traj.rows.iter().filter(|r| r.mean_radius >= 0.2) {
        let exact = (1.0 - 2.0 * row.t).sqrt();
        assert!((row.mean_radius / exact - 1.0).abs() <= 1e-2);
        assert!(row.radius_spread <= 1e-4 * 1.0);
    }
}

#[test]
fn coupled_circle_matches_scalar_oracle() {
    let c = CurveState::circle([0.0, 0.0], 1.0, 256, 2.0).unwrap();
    let (traj, _) = run_curve(c, &params(1.0), &shifted(), &CurveRunOptions::default()).unwrap();
    let oracle = circle_oracle(1.0, 2.0, 1.0, 1.0, 1e-6, 1.0);
    let mut checked = 0;
    for row in traj.rows.iter().filter(|r| r.mean_radius >= 0.2).step_by(50) {
        let r = interpolate(&oracle, row.t);
        assert!((row.mean_radius / r - 1.0).abs() <= 1e-2, "t={} {} vs {}", row.t, row.mean_radius, r);
        assert!(row.alpha.abs() <= 2.0);
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn comparison_principle_enclosure() {
    // Ellipse inside the unit circle about its centroid.
    let c = CurveState::ellipse([0.0, 0.0], 1.0, 0.6, 128, 1.0).unwrap();
    let r0 = c.enclosing_radius(c.centroid());
    let h_tol = 2.0 * c.max_segment();
    let m = SigmaModel::quadratic_shifted();
    let (_, report) = run_curve(c, &params(0.3), &shifted(), &CurveRunOptions::default()).unwrap();
    for &(t, r) in &report.enclosing_radius {
        let bound = (r0 * r0 - 2.0 * m.c_lower() * t).max(0.0).sqrt();
        assert!(r <= bound + h_tol, "t={t}: {r} > {bound}");
    }
}

#[test]
fn perimeter_decreases_for_convex_curve() {
    let c = CurveState::ellipse([0.5, 0.5], 1.5, 1.0, 128, 0.5).unwrap();
    let (traj, _) = run_curve(c, &params(0.2), &shifted(), &CurveRunOptions::default()).unwrap();
    for w in traj.rows.windows(2) {
        assert!(w[1].length < w[0].length);
        assert!(w[1].alpha.abs() <= 0.5);
    }
}

#[test]
fn rigid_motion_equivariance() {
    let base = CurveState::ellipse([0.0, 0.0], 1.2, 0.7, 96, 0.3).unwrap();
    let (s, c) = (0.7f64.sin(), 0.7f64.cos());
    let shift = [2.0, -1.0];
    let moved = CurveState::new(
        base.pts.iter().map(|p| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]]).collect(),
        0.3,
        0.0,
    )
    .unwrap();
    let p = Params {
        t_end: 0.05,
        dt: TimeStep::Fixed(2e-5),
        ..Params::default()
    };
    let opts = CurveRunOptions::default();
    let (ta, _) = run_curve(base, &p, &shifted(), &opts).unwrap();
    let (tb, _) = run_curve(moved, &p, &shifted(), &opts).unwrap();
    let (a, b) = (&ta.snapshots.last().unwrap().state, &tb.snapshots.last().unwrap().state);
    assert_eq!(a.t, b.t);
    for (pa, pb) in a.pts.iter().zip(&b.pts) {
        let mapped = [c * pa[0] - s * pa[1] + shift[0], s * pa[0] + c * pa[1] + shift[1]];
        assert!((mapped[0] - pb[0]).abs() <= 1e-9 * 3.0);
        assert!((mapped[1] - pb[1]).abs() <= 1e-9 * 3.0);
    }
}

#[test]
fn ellipse_step_matches_fine_rk4_and_rounds_the_curve() {
    let c = CurveState::ellipse([0.0, 0.0], 2.0, 1.0, 64, 0.0).unwrap();
    let energy = CurveEnergy::Isotropic(SigmaModel::constant(1.0).unwrap());
    let p = Params::default();
    let dt = 0.2 * c.min_segment().powi(2);
    let next = curve_solver::step_curve(&c, dt, &p, &energy).unwrap();

    // Fine RK4 on the same vertex ODE p' = κn.
    let velocity = |s: &CurveState| {
        let g = polygon_geometry(s).unwrap();
        (0..s.len())
            .map(|i| [g.curvatures[i] * g.normals[i][0], g.curvatures[i] * g.normals[i][1]])
            .collect::<Vec<_>>()
    };
    let add = |s: &CurveState, v: &[[f64; 2]], h: f64| CurveState {
        pts: s.pts.iter().zip(v).map(|(p, v)| [p[0] + h * v[0], p[1] + h * v[1]]).collect(),
        alpha: 0.0,
        t: 0.0,
    };
    let mut fine = c.clone();
    let h = dt / 100.0;
    for _ in 0..100 {
        let k1 = velocity(&fine);
        let k2 = velocity(&add(&fine, &k1, h / 2.0));
        let k3 = velocity(&add(&fine, &k2, h / 2.0));
        let k4 = velocity(&add(&fine, &k3, h));
        fine.pts = fine
            .pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                [
                    p[0] + h / 6.0 * (k1[i][0] + 2.0 * k2[i][0] + 2.0 * k3[i][0] + k4[i][0]),
                    p[1] + h / 6.0 * (k1[i][1] + 2.0 * k2[i][1] + 2.0 * k3[i][1] + k4[i][1]),
                ]
            })
            .collect();
    }
    let max_move = c.pts.iter().zip(&next.pts).map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])).fold(0.0, f64::max);
    let err = fine.pts.iter().zip(&next.pts).map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1])).fold(0.0, f64::max);
    assert!(err < 1e-2 * max_move, "{err} vs {max_move}");

    // Ends (high curvature) move further than the flanks.
    let disp = |i: usize| (c.pts[i][0] - next.pts[i][0]).hypot(c.pts[i][1] - next.pts[i][1]);
    assert!(disp(0) > disp(16));
    let iso = |s: &CurveState| s.perimeter().powi(2) / (4.0 * PI * s.area());
    assert!(iso(&next) < iso(&c));
}

#[test]
fn anisotropic_run_stays_simple() {
    let c = CurveState::circle([0.0, 0.0], 1.0, 128, 0.5).unwrap();
    let energy = CurveEnergy::Anisotropic(AnisotropicSigma::modulated(
        SigmaModel::quadratic_shifted(),
        1.0,
        0.05,
        4.0,
    ));
    let (traj, report) = run_curve(c, &params(0.2), &energy, &CurveRunOptions::default()).unwrap();
    assert_eq!(report.status, CurveStatus::Completed);
    assert!(traj.rows.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-12));
    assert!(traj.rows.iter().all(|r| r.alpha.abs() <= 0.5));
}

#[test]
fn line_tension_residual_converges() {
    let residual = |m: usize, model: &AnisotropicSigma| {
        line_tension_residual(&CurveState::circle([0.0, 0.0], 1.0, m, 0.0).unwrap(), model, 0.0).unwrap()
    };
    let iso = AnisotropicSigma::isotropic(SigmaModel::quadratic_shifted());
    let order = (residual(128, &iso) / residual(256, &iso)).log2();
    assert!(order >= 1.5, "isotropic order {order}");

    let cos2 = AnisotropicSigma::cosine(2.0, 1.0, 2.0);
    assert!(residual(256, &cos2) <= 1e-2);
    let order = (residual(128, &cos2) / residual(512, &cos2)).log2() / 2.0;
    assert!(order >= 1.5, "anisotropic order {order}");
}
