//! Caustic geometry: four vertices on the equipotential, four fitted arcs,
//! boundary actions along the closed curve and EBK integrals per arc.

use crate::classical::{CausticPoint, CausticPointCloud};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::model::HamiltonianModel;
use crate::numerics::{bisect, integrate, integrate_endpoint_sqrt, CubicSpline};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// 1 = lower left, then clockwise.
    pub index: usize,
    pub position: Point,
    /// `|U(position) − E|`
    pub residual: f64,
}

/// Which coordinate parametrizes the arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcAxis {
    /// `y = f(x)`: top and bottom arcs.
    YOfX,
    /// `x = f(y)`: left and right arcs.
    XOfY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Counterclockwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcFit {
    /// 1 = left, 2 = top, 3 = right, 4 = bottom.
    pub index: usize,
    pub axis: ArcAxis,
    pub spline: CubicSpline,
    /// Parameter values of the two vertices bounding the arc (ascending).
    pub domain: (f64, f64),
    /// Largest continuation allowed beyond each end of the domain.
    pub extension: f64,
    pub fit_residual: f64,
    /// Number of cloud points the arc was fitted to.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caustic {
    pub energy: f64,
    pub vertices: [Vertex; 4],
    pub arcs: [ArcFit; 4],
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CausticSettings {
    /// Spline intervals per arc (upper bound; reduced for sparse arcs).
    pub intervals: usize,
    /// Roughness penalty relative to the data term.
    pub penalty: f64,
    pub fit_tolerance: f64,
    /// A vertex candidate must have kinetic energy below this fraction of E.
    pub vertex_kinetic_fraction: f64,
    /// Maximum continuation beyond each vertex, as a fraction of the arc domain.
    pub extension_fraction: f64,
}

impl Default for CausticSettings {
    fn default() -> Self {
        Self { intervals: 128, penalty: 1e-6, fit_tolerance: 1e-3, vertex_kinetic_fraction: 0.25, extension_fraction: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAction {
    pub value: f64,
    /// Set when the path crossed points with `U > E` (integrand clamped to zero).
    pub clamped: bool,
}

impl ArcFit {
    /// A straight arc `f ≡ offset` over `domain` (the separable-limit sides).
    pub fn line(index: usize, axis: ArcAxis, offset: f64, domain: (f64, f64), extension: f64) -> Self {
        let spline = CubicSpline { start: domain.0, spacing: (domain.1 - domain.0) / 4.0, coefficients: vec![offset; 7] };
        Self { index, axis, spline, domain, extension, fit_residual: 0.0, support: 0 }
    }

    pub fn f(&self, t: f64) -> f64 {
        self.spline.eval(t)
    }

    /// `f`, `f′`, `f″`
    pub fn f3(&self, t: f64) -> [f64; 3] {
        self.spline.eval3(t)
    }

    pub fn point(&self, t: f64) -> Point {
        let v = self.f(t);
        match self.axis {
            ArcAxis::YOfX => Point::new(t, v),
            ArcAxis::XOfY => Point::new(v, t),
        }
    }

    /// Scale factor `g = √(1 + f′²)`.
    pub fn scale_factor(&self, t: f64) -> f64 {
        self.f3(t)[1].hypot(1.0)
    }

    /// Effective potential `U_k(t) = U(point(t))`.
    pub fn potential(&self, model: &HamiltonianModel, t: f64) -> f64 {
        model.potential(self.point(t))
    }

    /// Coordinate of `q` used as this arc's parameter.
    pub fn parameter_of(&self, q: Point) -> f64 {
        match self.axis {
            ArcAxis::YOfX => q.x,
            ArcAxis::XOfY => q.y,
        }
    }

    pub fn length(&self) -> f64 {
        self.domain.1 - self.domain.0
    }
}

fn centroid(points: &[CausticPoint]) -> Point {
    let n = points.len().max(1) as f64;
    points.iter().fold(Point::default(), |acc, c| acc + c.q) * (1.0 / n)
}

/// The four points where the family touches `U = E`, lower left first then clockwise.
pub fn extract_vertices(cloud: &CausticPointCloud, model: &HamiltonianModel, energy: f64, settings: &CausticSettings) -> Result<[Vertex; 4]> {
    if cloud.points.is_empty() {
        return Err(Error::DegenerateFamily("empty caustic point cloud".into()));
    }
    let c = centroid(&cloud.points);
    // quadrant order: lower left, upper left, upper right, lower right
    let quadrant = |q: Point| match (q.x < c.x, q.y < c.y) {
        (true, true) => 0,
        (true, false) => 1,
        (false, false) => 2,
        (false, true) => 3,
    };
    let mut best: [Option<(f64, Point)>; 4] = [None; 4];
    for p in &cloud.points {
        let kinetic = p.p.dot(p.p) / (2.0 * model.mass);
        let k = quadrant(p.q);
        if best[k].is_none_or(|(b, _)| kinetic < b) {
            best[k] = Some((kinetic, p.q));
        }
    }
    let mut out = [Vertex { index: 0, position: Point::default(), residual: 0.0 }; 4];
    for (k, b) in best.iter().enumerate() {
        let Some((kinetic, q)) = *b else {
            return Err(Error::DegenerateFamily(format!("no caustic points near vertex {}", k + 1)));
        };
        if kinetic > settings.vertex_kinetic_fraction * energy {
            return Err(Error::DegenerateFamily(format!(
                "vertex {} candidate has kinetic energy {kinetic:.3e}, the family does not reach the equipotential there",
                k + 1
            )));
        }
        out[k] = project_vertex(model, energy, k + 1, q)?;
    }
    Ok(out)
}

fn project_vertex(model: &HamiltonianModel, energy: f64, index: usize, q: Point) -> Result<Vertex> {
    let position = model.equipotential_point(energy, q)?;
    Ok(Vertex { index, position, residual: (model.potential(position) - energy).abs() })
}

fn arc_of(point: &CausticPoint, c: Point) -> usize {
    if point.p.y.abs() > point.p.x.abs() {
        if point.q.x < c.x {
            1
        } else {
            3
        }
    } else if point.q.y > c.y {
        2
    } else {
        4
    }
}

/// Vertices bounding arc `k` (1-based indices), in the order (start, end) of
/// increasing arc parameter.
fn arc_vertices(k: usize) -> (usize, usize) {
    match k {
        1 => (1, 2),
        2 => (2, 3),
        3 => (4, 3),
        _ => (1, 4),
    }
}

/// Fits each arc as a smoothing cubic spline graph through its share of the
/// cloud, using both positions and the tangent directions carried by the momenta.
pub fn fit_arcs(cloud: &CausticPointCloud, vertices: &[Vertex; 4], energy: f64, model: &HamiltonianModel, settings: &CausticSettings) -> Result<[ArcFit; 4]> {
    let c = centroid(&cloud.points);
    let t_end = cloud.points.iter().map(|p| p.t).fold(0.0, f64::max);
    let fits: Vec<ArcFit> = (1..=4)
        .map(|k| {
            let pts: Vec<&CausticPoint> = cloud.points.iter().filter(|p| arc_of(p, c) == k).collect();
            fit_one_arc(k, &pts, vertices, energy, model, t_end, settings)
        })
        .collect::<Result<_>>()?;
    Ok(fits.try_into().expect("four arcs"))
}

fn fit_one_arc(
    k: usize,
    pts: &[&CausticPoint],
    vertices: &[Vertex; 4],
    energy: f64,
    model: &HamiltonianModel,
    t_end: f64,
    settings: &CausticSettings,
) -> Result<ArcFit> {
    if pts.len() < 4 {
        return Err(Error::DegenerateFamily(format!("arc {k} has only {} caustic points", pts.len())));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|p| (p.q.x, p.q.y)).unzip();
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    let axis = if spread(&ys) > spread(&xs) { ArcAxis::XOfY } else { ArcAxis::YOfX };
    let (params, values) = match axis {
        ArcAxis::YOfX => (xs, ys),
        ArcAxis::XOfY => (ys, xs),
    };
    let lo = params.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = params.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let len = hi - lo;
    let intervals = settings.intervals;

    // points close to the end of the run fade out so that the fit varies
    // continuously as new touchings appear at the final time
    let taper = |t: f64| ((t_end - t) / (0.05 * t_end)).clamp(0.0, 1.0);
    let weights: Vec<f64> = pts.iter().map(|p| taper(p.t)).collect();
    let two_m_e = 2.0 * model.mass * energy;
    let slopes: Vec<(f64, f64, f64)> = pts
        .iter()
        .zip(&params)
        .filter_map(|(p, &t)| {
            let (along, across) = match axis {
                ArcAxis::YOfX => (p.p.x, p.p.y),
                ArcAxis::XOfY => (p.p.y, p.p.x),
            };
            let kinetic = p.p.dot(p.p) / two_m_e;
            (along.abs() > 1e-12).then(|| (t, across / along, taper(p.t) * kinetic * (0.1 * len).powi(2)))
        })
        .collect();
    let spline = CubicSpline::fit_with_slopes(&params, &values, &weights, &slopes, lo, hi, intervals, settings.penalty)
        .ok_or_else(|| Error::Numerical(format!("arc {k}: singular spline system")))?;
    let fit_residual = params
        .iter()
        .zip(&values)
        .map(|(&t, &v)| {
            let [f, d, _] = spline.eval3(t);
            (v - f).abs() / d.hypot(1.0)
        })
        .fold(0.0, f64::max);
    if fit_residual > settings.fit_tolerance {
        return Err(Error::FitFailure { arc: k, residual: fit_residual, intervals });
    }
    let (va, vb) = arc_vertices(k);
    let pa = vertices[va - 1].position;
    let pb = vertices[vb - 1].position;
    let (da, db) = match axis {
        ArcAxis::YOfX => (pa.x, pb.x),
        ArcAxis::XOfY => (pa.y, pb.y),
    };
    let domain = (da.min(db), da.max(db));
    let extension = settings.extension_fraction * (domain.1 - domain.0);
    Ok(ArcFit { index: k, axis, spline, domain, extension, fit_residual, support: pts.len() })
}

/// Intersection of a `x = f(y)` arc with a `y = f(x)` arc by Newton iteration.
fn intersect(vertical: &ArcFit, horizontal: &ArcFit, guess: Point) -> Option<Point> {
    let mut y = guess.y;
    for _ in 0..50 {
        let [x, dx, _] = vertical.f3(y);
        let [yh, dyh, _] = horizontal.f3(x);
        let g = yh - y;
        let dg = dyh * dx - 1.0;
        if dg.abs() < 1e-12 {
            return None;
        }
        let step = g / dg;
        y -= step;
        if step.abs() < 1e-14 * (1.0 + y.abs()) {
            break;
        }
    }
    let p = Point::new(vertical.f(y), y);
    (p.is_finite() && p.dist(guess) < 0.5 * (vertical.length() + horizontal.length())).then_some(p)
}

/// Full construction: vertices, arcs, and vertices refined at the arc corners.
pub fn build_caustic(cloud: &CausticPointCloud, model: &HamiltonianModel, energy: f64, settings: &CausticSettings) -> Result<Caustic> {
    let coarse = extract_vertices(cloud, model, energy, settings)?;
    let mut arcs = fit_arcs(cloud, &coarse, energy, model, settings)?;
    let mut vertices = coarse;
    // vertex k joins a vertical and a horizontal arc
    let corners = [(1usize, 4usize), (1, 2), (3, 2), (3, 4)];
    for (k, &(v, h)) in corners.iter().enumerate() {
        if arcs[v - 1].axis != ArcAxis::XOfY || arcs[h - 1].axis != ArcAxis::YOfX {
            continue;
        }
        if let Some(p) = intersect(&arcs[v - 1], &arcs[h - 1], coarse[k].position) {
            if let Ok(vx) = project_vertex(model, energy, k + 1, p) {
                vertices[k] = vx;
            }
        }
    }
    for arc in arcs.iter_mut() {
        let (va, vb) = arc_vertices(arc.index);
        let (a, b) = (arc.parameter_of(vertices[va - 1].position), arc.parameter_of(vertices[vb - 1].position));
        arc.domain = (a.min(b), a.max(b));
        arc.extension = settings.extension_fraction * (arc.domain.1 - arc.domain.0);
    }
    Ok(Caustic { energy, vertices, arcs, orientation: Orientation::Counterclockwise })
}

/// Parameter values where `U_k = E` on either side of the arc's potential minimum.
pub fn turning_points(model: &HamiltonianModel, arc: &ArcFit, energy: f64) -> Result<(f64, f64)> {
    let (lo, hi) = arc.domain;
    let len = hi - lo;
    let f = |t: f64| arc.potential(model, t) - energy;
    let n = 400;
    let step = len / n as f64;
    let (mut t_min, mut u_min) = (lo, f64::INFINITY);
    for i in 0..=n {
        let t = lo + i as f64 * step;
        let u = f(t);
        if u < u_min {
            t_min = t;
            u_min = u;
        }
    }
    if !(u_min < 0.0) {
        return Err(Error::EmptyWell { arc: arc.index });
    }
    let reach = (len + arc.extension) / step;
    let find = |dir: f64| -> Option<f64> {
        let mut a = t_min;
        for _ in 0..reach.ceil() as usize + 1 {
            let b = a + dir * step;
            if f(b) >= 0.0 {
                return bisect(f, a.min(b), a.max(b), 1e-14 * (1.0 + a.abs()));
            }
            a = b;
        }
        None
    };
    match (find(-1.0), find(1.0)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::NoOscillatoryRegion { arc: arc.index }),
    }
}

/// `∫ √(2m(E − U_k)) g dt` between the arc's turning points.
pub fn ebk_integral(model: &HamiltonianModel, arc: &ArcFit, energy: f64) -> Result<f64> {
    let (t1, t2) = turning_points(model, arc, energy)?;
    let m = model.mass;
    Ok(integrate_endpoint_sqrt(
        |t| (2.0 * m * (energy - arc.potential(model, t))).max(0.0).sqrt() * arc.scale_factor(t),
        t1,
        t2,
        1e-12,
    ))
}

/// Perimeter pieces `(arc index, from, to)` traversed counterclockwise from `start`.
fn perimeter(caustic: &Caustic, start: usize) -> Vec<(usize, f64, f64)> {
    // counterclockwise vertex sequence 1 → 4 → 3 → 2 → 1 and the arcs between
    let ring = [(1usize, 4usize, 4usize), (4, 3, 3), (3, 2, 2), (2, 1, 1)];
    let first = ring.iter().position(|r| r.0 == start).unwrap_or(0);
    (0..4)
        .map(|i| {
            let (va, vb, k) = ring[(first + i) % 4];
            let arc = &caustic.arcs[k - 1];
            (k, arc.parameter_of(caustic.vertices[va - 1].position), arc.parameter_of(caustic.vertices[vb - 1].position))
        })
        .collect()
}

pub fn perimeter_length(caustic: &Caustic) -> f64 {
    perimeter(caustic, 1)
        .iter()
        .map(|&(k, a, b)| integrate(|t| caustic.arcs[k - 1].scale_factor(t), a.min(b), a.max(b), 1e-12))
        .sum()
}

/// `w_C(s) = ∫₀ˢ √(2m(E − U)) dℓ` along the caustic, counterclockwise from
/// vertex `start_vertex`, with `s` measured in arc length.
pub fn boundary_action(model: &HamiltonianModel, caustic: &Caustic, start_vertex: usize, s: f64) -> Result<BoundaryAction> {
    if !(1..=4).contains(&start_vertex) {
        return Err(Error::InvalidArgument(format!("vertex index must be 1..=4, got {start_vertex}")));
    }
    let total = perimeter_length(caustic);
    if !(s >= 0.0 && s <= total * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("arc length {s} outside [0, {total}]")));
    }
    let energy = caustic.energy;
    let two_m = 2.0 * model.mass;
    let mut clamped = false;
    let mut value = 0.0;
    let mut remaining = s;
    for (k, a, b) in perimeter(caustic, start_vertex) {
        if remaining <= 0.0 {
            break;
        }
        let arc = &caustic.arcs[k - 1];
        let ds = |t: f64| arc.scale_factor(t);
        let seg = integrate(ds, a.min(b), a.max(b), 1e-12);
        let end = if remaining >= seg {
            b
        } else {
            let len_to = |t: f64| integrate(ds, a.min(t), a.max(t), 1e-12) - remaining;
            bisect(len_to, a.min(b), a.max(b), 1e-13).unwrap_or(b)
        };
        let integrand = |t: f64| {
            let ke = energy - arc.potential(model, t);
            (two_m * ke.max(0.0)).sqrt() * arc.scale_factor(t)
        };
        let (lo, hi) = (a.min(end), a.max(end));
        for i in 0..=64 {
            if arc.potential(model, lo + (hi - lo) * i as f64 / 64.0) > energy + 1e-12 * energy.max(1.0) {
                clamped = true;
            }
        }
        value += integrate(integrand, lo, hi, 1e-10);
        remaining -= seg;
    }
    Ok(BoundaryAction { value, clamped })
}
