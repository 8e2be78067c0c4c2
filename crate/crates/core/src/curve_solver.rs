//! Front tracking for closed polygonal curves under v_n = μ(σ_θθ + σ)κ.
//!
//! Vertices move along their normals with an explicit Euler step; the
//! misorientation follows α' = -γ ∫_Γ σ_α dℋ¹ with Heun's method and the
//! geometry frozen over the step. Vertices are periodically redistributed to
//! equal arclength, and the polygon is checked for self-intersection at the
//! same time.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::graph_solver::{Params, TimeStep};
use crate::sigma::{AnisotropicSigma, SigmaModel};

pub const MIN_VERTICES: usize = 16;
const MIN_SEGMENT: f64 = 1e-12;
/// Turning angle (radians) beyond which the polygon no longer resolves the
/// curvature.
const MAX_TURNING: f64 = 0.75 * PI;
/// Normal angles sampled when checking the stiffness of an anisotropic model.
const STIFFNESS_SAMPLES: usize = 720;

type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Anticlockwise rotation by π/2.
fn rotate(a: Point) -> Point {
    [-a[1], a[0]]
}

/// Closed polygon with implicit wraparound.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveState {
    pub pts: Vec<Point>,
    pub alpha: f64,
    pub t: f64,
}

impl CurveState {
    /// Validates vertex count, segment lengths and simplicity.
    pub fn new(pts: Vec<Point>, alpha: f64, t: f64) -> Result<Self> {
        if pts.len() < MIN_VERTICES {
            return Err(Error::Config(format!(
                "a curve needs at least {MIN_VERTICES} vertices, got {}",
                pts.len()
            )));
        }
        if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) || !alpha.is_finite() {
            return Err(Error::Config("curve data must be finite".into()));
        }
        let state = CurveState { pts, alpha, t };
        if state.min_segment() <= MIN_SEGMENT {
            return Err(Error::Geometry("repeated vertex".into()));
        }
        if let Some((i, j)) = state.self_intersection() {
            return Err(Error::Geometry(format!("edges {i} and {j} intersect")));
        }
        Ok(state)
    }

    /// Regular m-gon inscribed in the circle, counter-clockwise.
    pub fn circle(center: Point, radius: f64, m: usize, alpha: f64) -> Result<Self> {
        Self::ellipse(center, radius, radius, m, alpha)
    }

    /// Ellipse sampled at equally spaced parameter angles, counter-clockwise.
    pub fn ellipse(center: Point, a: f64, b: f64, m: usize, alpha: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Config("ellipse semi-axes must be positive".into()));
        }
        let pts = (0..m)
            .map(|i| {
                let phi = TAU * i as f64 / m as f64;
                [center[0] + a * phi.cos(), center[1] + b * phi.sin()]
            })
            .collect();
        Self::new(pts, alpha, 0.0)
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    fn edge(&self, i: usize) -> Point {
        let m = self.pts.len();
        sub(self.pts[(i + 1) % m], self.pts[i])
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        (0..self.len()).map(|i| norm(self.edge(i))).collect()
    }

    pub fn min_segment(&self) -> f64 {
        self.segment_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_segment(&self) -> f64 {
        self.segment_lengths().into_iter().fold(0.0, f64::max)
    }

    pub fn perimeter(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Signed area (positive for counter-clockwise curves).
    pub fn area(&self) -> f64 {
        let m = self.len();
        0.5 * (0..m)
            .map(|i| cross(self.pts[i], self.pts[(i + 1) % m]))
            .sum::<f64>()
    }

    pub fn centroid(&self) -> Point {
        let m = self.len() as f64;
        let (sx, sy) = self
            .pts
            .iter()
            .fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
        [sx / m, sy / m]
    }

    /// Largest vertex distance from `center`.
    pub fn enclosing_radius(&self, center: Point) -> f64 {
        self.pts
            .iter()
            .map(|&p| norm(sub(p, center)))
            .fold(0.0, f64::max)
    }

    /// Mean vertex distance from the vertex centroid.
    pub fn mean_radius(&self) -> f64 {
        let c = self.centroid();
        self.pts.iter().map(|&p| norm(sub(p, c))).sum::<f64>() / self.len() as f64
    }

    /// First pair of non-adjacent edges that intersect, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let m = self.len();
        for i in 0..m {
            let (a, b) = (self.pts[i], self.pts[(i + 1) % m]);
            for j in i + 2..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let (c, d) = (self.pts[j], self.pts[(j + 1) % m]);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Redistributes the vertices to equal arclength by linear interpolation,
    /// keeping vertex 0 fixed.
    pub fn redistribute(&self) -> CurveState {
        let m = self.len();
        let lengths = self.segment_lengths();
        let total: f64 = lengths.iter().sum();
        let spacing = total / m as f64;
        let mut pts = Vec::with_capacity(m);
        pts.push(self.pts[0]);
        let mut edge = 0;
        let mut start = 0.0;
        for k in 1..m {
            let target = k as f64 * spacing;
            while edge < m - 1 && start + lengths[edge] < target {
                start += lengths[edge];
                edge += 1;
            }
            let w = ((target - start) / lengths[edge]).clamp(0.0, 1.0);
            let p = self.pts[edge];
            let e = self.edge(edge);
            pts.push([p[0] + w * e[0], p[1] + w * e[1]]);
        }
        CurveState {
            pts,
            alpha: self.alpha,
            t: self.t,
        }
    }
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on_segment = |p: Point, q: Point, r: Point| {
        r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Discrete geometry of a polygon. Edge `i` joins vertex `i` to `i + 1`;
/// everything else lives on vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonGeometry {
    pub lengths: Vec<f64>,
    pub tangents: Vec<Point>,
    pub normals: Vec<Point>,
    pub curvatures: Vec<f64>,
    /// Turning angle at each vertex.
    pub turning: Vec<f64>,
    /// Vertex arclength element ½(|e_{i-1}| + |e_i|).
    pub dual_lengths: Vec<f64>,
    pub total_length: f64,
}

impl PolygonGeometry {
    /// Polar angle of the vertex normal.
    pub fn normal_angle(&self, i: usize) -> f64 {
        self.normals[i][1].atan2(self.normals[i][0])
    }
}

/// Vertex tangents bisect the adjacent edges, normals are the tangents
/// rotated by +π/2 and the curvature is 2 sin(Δθ/2) over the dual length,
/// signed by the turning direction.
pub fn polygon_geometry(curve: &CurveState) -> Result<PolygonGeometry> {
    let m = curve.len();
    let lengths = curve.segment_lengths();
    if let Some(i) = lengths.iter().position(|&l| !(l > MIN_SEGMENT)) {
        return Err(Error::Geometry(format!("degenerate edge {i}")));
    }
    let units: Vec<Point> = (0..m)
        .map(|i| {
            let e = curve.edge(i);
            [e[0] / lengths[i], e[1] / lengths[i]]
        })
        .collect();
    let mut tangents = Vec::with_capacity(m);
    let mut normals = Vec::with_capacity(m);
    let mut curvatures = Vec::with_capacity(m);
    let mut turning = Vec::with_capacity(m);
    let mut dual_lengths = Vec::with_capacity(m);
    for i in 0..m {
        let prev = units[(i + m - 1) % m];
        let next = units[i];
        let bisector = [prev[0] + next[0], prev[1] + next[1]];
        let bl = norm(bisector);
        if bl < 1e-12 {
            return Err(Error::Geometry(format!("cusp at vertex {i}")));
        }
        let b = [bisector[0] / bl, bisector[1] / bl];
        let angle = cross(prev, next).atan2(prev[0] * next[0] + prev[1] * next[1]);
        let dual = 0.5 * (lengths[(i + m - 1) % m] + lengths[i]);
        tangents.push(b);
        normals.push(rotate(b));
        curvatures.push(2.0 * (0.5 * angle).sin() / dual);
        turning.push(angle);
        dual_lengths.push(dual);
    }
    let total_length = lengths.iter().sum();
    Ok(PolygonGeometry {
        lengths,
        tangents,
        normals,
        curvatures,
        turning,
        dual_lengths,
        total_length,
    })
}

/// Energy model for the front tracker.
#[derive(Debug, Clone)]
pub enum CurveEnergy {
    Isotropic(SigmaModel),
    Anisotropic(AnisotropicSigma),
}

impl CurveEnergy {
    fn stiffness(&self, theta: f64, alpha: f64) -> f64 {
        match self {
            CurveEnergy::Isotropic(m) => m.eval(alpha),
            CurveEnergy::Anisotropic(a) => a.stiffness(theta, alpha),
        }
    }

    /// ∫_Γ σ dℋ¹
    pub fn energy(&self, geom: &PolygonGeometry, alpha: f64) -> f64 {
        match self {
            CurveEnergy::Isotropic(m) => m.eval(alpha) * geom.total_length,
            CurveEnergy::Anisotropic(a) => (0..geom.normals.len())
                .map(|i| a.eval(geom.normal_angle(i), alpha) * geom.dual_lengths[i])
                .sum(),
        }
    }

    /// ∫_Γ σ_α dℋ¹
    fn alpha_drive(&self, geom: &PolygonGeometry, alpha: f64) -> f64 {
        match self {
            CurveEnergy::Isotropic(m) => m.deriv(alpha) * geom.total_length,
            CurveEnergy::Anisotropic(a) => (0..geom.normals.len())
                .map(|i| a.d_alpha(geom.normal_angle(i), alpha) * geom.dual_lengths[i])
                .sum(),
        }
    }

    /// Refuses anisotropic models whose stiffness σ_θθ + σ is not positive
    /// at the sampled normal angles.
    pub fn check_stiffness(&self, alpha: f64) -> Result<()> {
        if let CurveEnergy::Anisotropic(a) = self {
            let min = a.min_stiffness(alpha, STIFFNESS_SAMPLES);
            if !(min > 0.0) {
                return Err(Error::Config(format!(
                    "anisotropic stiffness must be positive, minimum {min} at alpha = {alpha}"
                )));
            }
        }
        Ok(())
    }
}

/// Largest explicit step: cfl_safety·(min segment)²/(μ·max stiffness).
pub fn curve_stable_dt(
    curve: &CurveState,
    geom: &PolygonGeometry,
    params: &Params,
    energy: &CurveEnergy,
) -> f64 {
    let max_stiffness = (0..curve.len())
        .map(|i| energy.stiffness(geom.normal_angle(i), curve.alpha))
        .fold(0.0, f64::max);
    if max_stiffness <= 0.0 {
        return f64::INFINITY;
    }
    let h = geom.lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    params.cfl_safety * h * h / (params.mu * max_stiffness)
}

/// One explicit step. Returns [`Error::CflViolation`] instead of sub-stepping.
pub fn step_curve(
    curve: &CurveState,
    dt: f64,
    params: &Params,
    energy: &CurveEnergy,
) -> Result<CurveState> {
    let geom = polygon_geometry(curve)?;
    let limit = curve_stable_dt(curve, &geom, params, energy);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    let alpha = curve.alpha;
    let drive = |a: f64| -params.gamma * energy.alpha_drive(&geom, a);
    let predictor = alpha + dt * drive(alpha);
    let alpha_new = alpha + 0.5 * dt * (drive(alpha) + drive(predictor));

    let pts = curve
        .pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let speed = params.mu
                * energy.stiffness(geom.normal_angle(i), alpha)
                * geom.curvatures[i];
            let n = geom.normals[i];
            [p[0] + dt * speed * n[0], p[1] + dt * speed * n[1]]
        })
        .collect();
    Ok(CurveState {
        pts,
        alpha: alpha_new,
        t: curve.t + dt,
    })
}

/// Per-step record of a curve run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub t: f64,
    pub alpha: f64,
    pub energy: f64,
    pub length: f64,
    pub sup_kappa: f64,
    /// Largest vertex distance from the initial vertex centroid.
    pub enclosing_radius: f64,
    pub mean_radius: f64,
    /// Largest deviation of a vertex radius from `mean_radius`.
    pub radius_spread: f64,
}

impl CurveRow {
    fn of(curve: &CurveState, geom: &PolygonGeometry, energy: &CurveEnergy, center: Point) -> Self {
        let c = curve.centroid();
        let radii: Vec<f64> = curve.pts.iter().map(|&p| norm(sub(p, c))).collect();
        let mean = radii.iter().sum::<f64>() / radii.len() as f64;
        CurveRow {
            t: curve.t,
            alpha: curve.alpha,
            energy: energy.energy(geom, curve.alpha),
            length: geom.total_length,
            sup_kappa: geom.curvatures.iter().fold(0.0, |m, k| m.max(k.abs())),
            enclosing_radius: curve.enclosing_radius(center),
            mean_radius: mean,
            radius_spread: radii.iter().fold(0.0, |m, r| m.max((r - mean).abs())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSnapshot {
    pub step: usize,
    pub state: CurveState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveTrajectory {
    pub center: Point,
    pub snapshots: Vec<CurveSnapshot>,
    pub rows: Vec<CurveRow>,
}

/// Why a curve run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveStatus {
    /// Reached t_end.
    Completed,
    /// Perimeter fell below the extinction threshold.
    Extinct,
    /// The polygon stopped resolving the curvature.
    CurvatureOverflow,
    /// Self-intersection found at a redistribution.
    TopologyBreakdown,
}

impl CurveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveStatus::Completed => "completed",
            CurveStatus::Extinct => "extinct",
            CurveStatus::CurvatureOverflow => "curvature_overflow",
            CurveStatus::TopologyBreakdown => "topology_breakdown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionReport {
    pub status: CurveStatus,
    pub last_time: f64,
    pub final_perimeter: f64,
    /// (t, enclosing radius) about the initial vertex centroid.
    pub enclosing_radius: Vec<(f64, f64)>,
}

impl ExtinctionReport {
    /// Extinction time estimate; `None` unless the curve vanished.
    pub fn extinction_time(&self) -> Option<f64> {
        match self.status {
            CurveStatus::Extinct | CurveStatus::CurvatureOverflow => Some(self.last_time),
            _ => None,
        }
    }
}

/// Run controls specific to the front tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRunOptions {
    pub reparam_every: usize,
    pub snapshot_every: usize,
    /// Perimeter below which the curve counts as extinct; defaults to ten
    /// initial minimum segments.
    pub extinction_threshold: Option<f64>,
}

impl Default for CurveRunOptions {
    fn default() -> Self {
        CurveRunOptions {
            reparam_every: 10,
            snapshot_every: 100,
            extinction_threshold: None,
        }
    }
}

/// Integrates until `params.t_end` or extinction.
pub fn run_curve(
    curve0: CurveState,
    params: &Params,
    energy: &CurveEnergy,
    options: &CurveRunOptions,
) -> Result<(CurveTrajectory, ExtinctionReport)> {
    params.validate()?;
    if options.reparam_every == 0 || options.snapshot_every == 0 {
        return Err(Error::Config(
            "reparam_every and snapshot_every must be >= 1".into(),
        ));
    }
    energy.check_stiffness(curve0.alpha)?;
    if let Some((i, j)) = curve0.self_intersection() {
        return Err(Error::Geometry(format!("initial curve not simple: edges {i}, {j}")));
    }
    let threshold = options
        .extinction_threshold
        .unwrap_or(10.0 * curve0.min_segment());
    let center = curve0.centroid();

    let mut curve = curve0;
    let mut geom = polygon_geometry(&curve)?;
    let mut rows = vec![CurveRow::of(&curve, &geom, energy, center)];
    let mut snapshots = vec![CurveSnapshot {
        step: 0,
        state: curve.clone(),
    }];
    let mut status = CurveStatus::Completed;
    let mut k = 0;

    while curve.t < params.t_end {
        let limit = curve_stable_dt(&curve, &geom, params, energy);
        let requested = match params.dt {
            TimeStep::Auto => limit,
            TimeStep::Fixed(dt) => dt.min(limit),
        };
        let remaining = params.t_end - curve.t;
        if !requested.is_finite() {
            // Zero stiffness: the curve does not move.
            let dt = remaining;
            curve = step_curve(&curve, dt, params, energy)?;
            curve.t = params.t_end;
        } else if requested >= remaining {
            curve = step_curve(&curve, remaining, params, energy)?;
            curve.t = params.t_end;
        } else {
            curve = step_curve(&curve, requested, params, energy)?;
        }
        k += 1;
        if curve.pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite())
            || !curve.alpha.is_finite()
        {
            return Err(Error::Divergence { step: k, t: curve.t });
        }

        if k % options.reparam_every == 0 {
            if curve.self_intersection().is_some() {
                status = CurveStatus::TopologyBreakdown;
            } else {
                curve = curve.redistribute();
            }
        }
        match polygon_geometry(&curve) {
            Ok(g) => {
                geom = g;
                rows.push(CurveRow::of(&curve, &geom, energy, center));
                if status == CurveStatus::Completed {
                    if geom.total_length < threshold {
                        status = CurveStatus::Extinct;
                    } else if geom.turning.iter().any(|a| a.abs() > MAX_TURNING) {
                        status = CurveStatus::CurvatureOverflow;
                    }
                }
            }
            Err(_) if status == CurveStatus::Completed => status = CurveStatus::CurvatureOverflow,
            Err(_) => {}
        }
        let stop = status != CurveStatus::Completed;
        if k % options.snapshot_every == 0 || stop || curve.t >= params.t_end {
            snapshots.push(CurveSnapshot {
                step: k,
                state: curve.clone(),
            });
        }
        if stop {
            break;
        }
    }

    let report = ExtinctionReport {
        status,
        last_time: curve.t,
        final_perimeter: curve.perimeter(),
        enclosing_radius: rows.iter().map(|r| (r.t, r.enclosing_radius)).collect(),
    };
    Ok((
        CurveTrajectory {
            center,
            snapshots,
            rows,
        },
        report,
    ))
}

/// max_i |T_s - (σ_θθ + σ)κ n̂| for the line tension T = σ_θ n̂ + σ b̂, with
/// T_s from centered differences along the polygon.
pub fn line_tension_residual(
    curve: &CurveState,
    model: &AnisotropicSigma,
    alpha: f64,
) -> Result<f64> {
    let geom = polygon_geometry(curve)?;
    let m = curve.len();
    let tension: Vec<Point> = (0..m)
        .map(|i| {
            let th = geom.normal_angle(i);
            let (n, b) = (geom.normals[i], geom.tangents[i]);
            let (s_th, s) = (model.d_theta(th, alpha), model.eval(th, alpha));
            [s_th * n[0] + s * b[0], s_th * n[1] + s * b[1]]
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        let (prev, next) = ((i + m - 1) % m, (i + 1) % m);
        let ds = geom.lengths[prev] + geom.lengths[i];
        let ts = [
            (tension[next][0] - tension[prev][0]) / ds,
            (tension[next][1] - tension[prev][1]) / ds,
        ];
        let th = geom.normal_angle(i);
        let rhs = model.stiffness(th, alpha) * geom.curvatures[i];
        let n = geom.normals[i];
        worst = worst.max(norm([ts[0] - rhs * n[0], ts[1] - rhs * n[1]]));
    }
    Ok(worst)
}
