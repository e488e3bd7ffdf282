//! Classical trajectories, their Jacobi (variational) fields, and the caustic
//! points where the trajectory touches the envelope of its family.

use crate::error::{Error, Result};
use crate::geom::{PhasePoint, Point};
use crate::model::HamiltonianModel;
use serde::{Deserialize, Serialize};

/// Trajectories leaving this radius are reported as escaped.
pub const ESCAPE_RADIUS: f64 = 30.0;
pub const DEFAULT_T_MAX: f64 = 400.0;
pub const DEFAULT_STEP: f64 = 0.004;

// Fourth-order symplectic composition of leapfrog steps.
const CBRT2: f64 = 1.259_921_049_894_873_2;
const W1: f64 = 1.0 / (2.0 - CBRT2);
const W0: f64 = -CBRT2 * W1;
const DRIFT: [f64; 4] = [W1 / 2.0, (W0 + W1) / 2.0, (W0 + W1) / 2.0, W1 / 2.0];
const KICK: [f64; 3] = [W1, W0, W1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: PhasePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub energy: f64,
    pub step: f64,
}

/// One deviation field sampled along a trajectory: `(t, δq, δq̇)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiField {
    pub samples: Vec<(f64, Point, Point)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiBundle {
    pub fields: [JacobiField; 2],
    /// `(t, δq₁ ∧ δq₂)`
    pub wronskian: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausticPoint {
    pub q: Point,
    /// Momentum of the trajectory at the touching point (tangent to the caustic).
    pub p: Point,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CausticPointCloud {
    pub points: Vec<CausticPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBoundary {
    pub points: Vec<Point>,
    /// Larger side of a raster cell.
    pub cell: f64,
    /// Set when uncovered holes inside the swept region exceed 1% of it.
    pub under_covered: bool,
}

impl Trajectory {
    pub fn t_max(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn max_energy_drift(&self, model: &HamiltonianModel) -> f64 {
        self.samples
            .iter()
            .map(|s| (model.energy(&s.state) - self.energy).abs())
            .fold(0.0, f64::max)
    }
}

pub fn drift_bound(energy: f64) -> f64 {
    1e-9 * energy.abs().max(1.0)
}

/// One composite step of the state together with the tangent map
/// `J = ∂q/∂p₀`, `K = ∂p/∂p₀` (column `c` is the field started with `δq̇ = e_c`).
struct Stepper<'a> {
    model: &'a HamiltonianModel,
    h: f64,
}

impl Stepper<'_> {
    fn state(&self, s: &mut PhasePoint) {
        let inv_m = 1.0 / self.model.mass;
        for k in 0..4 {
            s.q = s.q + s.p * (DRIFT[k] * self.h * inv_m);
            if k < 3 {
                s.p = s.p - self.model.gradient(s.q) * (KICK[k] * self.h);
            }
        }
    }

    fn with_tangent(&self, s: &mut PhasePoint, j: &mut [[f64; 2]; 2], kk: &mut [[f64; 2]; 2]) {
        let inv_m = 1.0 / self.model.mass;
        for k in 0..4 {
            let a = DRIFT[k] * self.h * inv_m;
            s.q = s.q + s.p * a;
            for r in 0..2 {
                for c in 0..2 {
                    j[r][c] += a * kk[r][c];
                }
            }
            if k < 3 {
                let b = KICK[k] * self.h;
                s.p = s.p - self.model.gradient(s.q) * b;
                let hs = self.model.hessian(s.q);
                let mut hj = [[0.0; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        hj[r][c] = hs[r][0] * j[0][c] + hs[r][1] * j[1][c];
                    }
                }
                for r in 0..2 {
                    for c in 0..2 {
                        kk[r][c] -= b * hj[r][c];
                    }
                }
            }
        }
    }
}

fn step_count(t_max: f64, step: f64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
    }
    Ok((t_max / step).round().max(1.0) as usize)
}

/// Fixed-step fourth-order symplectic integration of Hamilton's equations.
pub fn integrate_trajectory(model: &HamiltonianModel, start: PhasePoint, t_max: f64, step: f64) -> Result<Trajectory> {
    let n = step_count(t_max, step)?;
    let energy = model.energy(&start);
    if !energy.is_finite() {
        return Err(Error::InvalidArgument("start state has non-finite energy".into()));
    }
    let bound = drift_bound(energy);
    let stepper = Stepper { model, h: step };
    let mut samples = Vec::with_capacity(n + 1);
    let mut s = start;
    samples.push(Sample { t: 0.0, state: s });
    for i in 1..=n {
        stepper.state(&mut s);
        let t = i as f64 * step;
        if !(s.q.norm() <= ESCAPE_RADIUS) {
            return Err(Error::Escape { t });
        }
        let drift = (model.energy(&s) - energy).abs();
        if drift > bound {
            return Err(Error::StepTooLarge { drift, bound, t });
        }
        samples.push(Sample { t, state: s });
    }
    Ok(Trajectory { samples, energy, step })
}

/// Jacobi fields with `δq(0) = 0`, `δq̇(0) = e₁, e₂`, propagated by the tangent
/// map of the same integrator that produced `trajectory`.
pub fn integrate_jacobi(model: &HamiltonianModel, trajectory: &Trajectory) -> JacobiBundle {
    let m = model.mass;
    let stepper = Stepper { model, h: trajectory.step };
    let n = trajectory.samples.len();
    let mut f1 = Vec::with_capacity(n);
    let mut f2 = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut s = trajectory.samples[0].state;
    let mut j = [[0.0; 2]; 2];
    let mut k = [[m, 0.0], [0.0, m]];
    for (i, sample) in trajectory.samples.iter().enumerate() {
        if i > 0 {
            stepper.with_tangent(&mut s, &mut j, &mut k);
        }
        let t = sample.t;
        f1.push((t, Point::new(j[0][0], j[1][0]), Point::new(k[0][0] / m, k[1][0] / m)));
        f2.push((t, Point::new(j[0][1], j[1][1]), Point::new(k[0][1] / m, k[1][1] / m)));
        w.push((t, j[0][0] * j[1][1] - j[0][1] * j[1][0]));
    }
    JacobiBundle { fields: [JacobiField { samples: f1 }, JacobiField { samples: f2 }], wronskian: w }
}

/// Cubic Hermite interpolation on `[0, h]` at `τ ∈ [0, 1]`.
fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, tau: f64) -> f64 {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + tau) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

fn wronskian_rate(a: &(f64, Point, Point), b: &(f64, Point, Point)) -> f64 {
    a.2.wedge(b.1) + a.1.wedge(b.2)
}

/// Zeroes of `w(t)` after `t = 0`, refined on the Hermite-cubic interpolant to
/// `1e−10` in time, with position and momentum interpolated at each zero.
pub fn detect_caustic_points(model: &HamiltonianModel, bundle: &JacobiBundle, trajectory: &Trajectory) -> Result<CausticPointCloud> {
    let w = &bundle.wronskian;
    let [f1, f2] = [&bundle.fields[0].samples, &bundle.fields[1].samples];
    let inv_m = 1.0 / model.mass;
    let mut points = Vec::new();
    for i in 1..w.len().saturating_sub(1) {
        let (w0, w1) = (w[i].1, w[i + 1].1);
        if !(w0 == 0.0 || w0 * w1 < 0.0) {
            continue;
        }
        let h = w[i + 1].0 - w[i].0;
        let d0 = wronskian_rate(&f1[i], &f2[i]);
        let d1 = wronskian_rate(&f1[i + 1], &f2[i + 1]);
        let tau = if w0 == 0.0 {
            0.0
        } else {
            crate::numerics::bisect(|u| hermite(w0, d0, w1, d1, h, u), 0.0, 1.0, 1e-10 / h).unwrap_or(w0 / (w0 - w1))
        };
        let (a, b) = (trajectory.samples[i].state, trajectory.samples[i + 1].state);
        let ga = model.gradient(a.q);
        let gb = model.gradient(b.q);
        let q = Point::new(
            hermite(a.q.x, a.p.x * inv_m, b.q.x, b.p.x * inv_m, h, tau),
            hermite(a.q.y, a.p.y * inv_m, b.q.y, b.p.y * inv_m, h, tau),
        );
        let p = Point::new(hermite(a.p.x, -ga.x, b.p.x, -gb.x, h, tau), hermite(a.p.y, -ga.y, b.p.y, -gb.y, h, tau));
        points.push(CausticPoint { q, p, t: w[i].0 + tau * h });
    }
    if points.is_empty() {
        return Err(Error::InsufficientIntegrationTime { t_max: trajectory.t_max() });
    }
    Ok(CausticPointCloud { points })
}

/// Start at rest on the equipotential `U = E` in direction `angle`, integrate,
/// and collect caustic points.
pub fn trace_family(model: &HamiltonianModel, energy: f64, angle: f64, t_max: f64, step: f64) -> Result<(Trajectory, CausticPointCloud)> {
    let q0 = model.equipotential_point(energy, Point::new(angle.cos(), angle.sin()))?;
    let traj = integrate_trajectory(model, PhasePoint::at_rest(q0), t_max, step)?;
    let bundle = integrate_jacobi(model, &traj);
    let cloud = detect_caustic_points(model, &bundle, &traj)?;
    Ok((traj, cloud))
}

/// Brute-force caustic: rasterize the trajectory on a `resolution × resolution`
/// grid and return the centres of covered cells bordering the exterior.
pub fn envelope_oracle(trajectory: &Trajectory, resolution: usize) -> EnvelopeBoundary {
    let n = resolution.max(4);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in &trajectory.samples {
        x0 = x0.min(s.state.q.x);
        x1 = x1.max(s.state.q.x);
        y0 = y0.min(s.state.q.y);
        y1 = y1.max(s.state.q.y);
    }
    // two empty cells of margin on each side so the exterior is connected
    let (dx, dy) = ((x1 - x0) / (n - 4) as f64, (y1 - y0) / (n - 4) as f64);
    let (ox, oy) = (x0 - 2.0 * dx, y0 - 2.0 * dy);
    let cell_of = |q: Point| {
        let i = (((q.x - ox) / dx) as usize).min(n - 1);
        let j = (((q.y - oy) / dy) as usize).min(n - 1);
        j * n + i
    };
    let mut covered = vec![false; n * n];
    for pair in trajectory.samples.windows(2) {
        let (a, b) = (pair[0].state.q, pair[1].state.q);
        let sub = (((b.x - a.x).abs() / dx).max((b.y - a.y).abs() / dy) * 4.0).ceil().max(1.0) as usize;
        for k in 0..=sub {
            covered[cell_of(a + (b - a) * (k as f64 / sub as f64))] = true;
        }
    }
    let mut exterior = vec![false; n * n];
    let mut stack: Vec<usize> = (0..n).flat_map(|i| [i, (n - 1) * n + i, i * n, i * n + n - 1]).collect();
    while let Some(c) = stack.pop() {
        if exterior[c] || covered[c] {
            continue;
        }
        exterior[c] = true;
        let (i, j) = (c % n, c / n);
        if i > 0 {
            stack.push(c - 1);
        }
        if i + 1 < n {
            stack.push(c + 1);
        }
        if j > 0 {
            stack.push(c - n);
        }
        if j + 1 < n {
            stack.push(c + n);
        }
    }
    let mut points = Vec::new();
    let (mut n_cov, mut holes) = (0usize, 0usize);
    for c in 0..n * n {
        let (i, j) = (c % n, c / n);
        if !covered[c] {
            if !exterior[c] {
                holes += 1;
            }
            continue;
        }
        n_cov += 1;
        let touches = [(i > 0).then(|| c - 1), (i + 1 < n).then(|| c + 1), (j > 0).then(|| c - n), (j + 1 < n).then(|| c + n)]
            .into_iter()
            .flatten()
            .any(|d| exterior[d]);
        if touches {
            points.push(Point::new(ox + (i as f64 + 0.5) * dx, oy + (j as f64 + 0.5) * dy));
        }
    }
    EnvelopeBoundary { points, cell: dx.max(dy), under_covered: holes * 100 > n_cov }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn harmonic_solution_and_drift() {
        let m = HamiltonianModel::uncoupled();
        let a = 1.3;
        let tr = integrate_trajectory(&m, PhasePoint::at_rest(Point::new(a, 0.0)), 50.0, DEFAULT_STEP).unwrap();
        for s in tr.samples.iter().step_by(997) {
            assert_relative_eq!(s.state.q.x, a * (m.omega_x * s.t).cos(), epsilon = 1e-8);
            assert_eq!(s.state.q.y, 0.0);
        }
        assert!(tr.max_energy_drift(&m) <= drift_bound(tr.energy));
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let m = HamiltonianModel::barbanis();
        let q0 = m.equipotential_point(5.18266, Point::new(-1.0, -0.8)).unwrap();
        let fwd = integrate_trajectory(&m, PhasePoint::at_rest(q0), 40.0, DEFAULT_STEP).unwrap();
        let end = fwd.samples.last().unwrap().state;
        let back = integrate_trajectory(&m, PhasePoint { q: end.q, p: end.p * -1.0 }, 40.0, DEFAULT_STEP).unwrap();
        let ret = back.samples.last().unwrap().state.q;
        assert!(ret.dist(q0) < 1e-6, "returned {ret:?} vs {q0:?}");
    }

    #[test]
    fn step_too_large_and_escape() {
        let m = HamiltonianModel::barbanis();
        let q0 = m.equipotential_point(5.0, Point::new(1.0, 0.3)).unwrap();
        assert!(matches!(integrate_trajectory(&m, PhasePoint::at_rest(q0), 20.0, 0.2), Err(Error::StepTooLarge { .. })));
        let fast = PhasePoint { q: Point::new(0.0, 0.0), p: Point::new(5.0, 5.0) };
        assert!(matches!(integrate_trajectory(&m, fast, 50.0, 0.001), Err(Error::Escape { .. })));
        assert!(integrate_trajectory(&m, fast, -1.0, 0.01).is_err());
        assert!(integrate_trajectory(&m, fast, 1.0, 0.0).is_err());
    }

    #[test]
    fn jacobi_initial_data_and_decoupled_limit() {
        let m = HamiltonianModel::uncoupled();
        let tr = integrate_trajectory(&m, PhasePoint::at_rest(Point::new(1.0, 0.5)), 10.0, DEFAULT_STEP).unwrap();
        let b = integrate_jacobi(&m, &tr);
        assert_eq!(b.wronskian[0].1, 0.0);
        assert_eq!(b.fields[0].samples[0].1, Point::new(0.0, 0.0));
        assert_eq!(b.fields[0].samples[0].2, Point::new(1.0, 0.0));
        assert_eq!(b.fields[1].samples[0].2, Point::new(0.0, 1.0));
        for (t, dq, _) in b.fields[0].samples.iter().step_by(501) {
            assert_relative_eq!(dq.x, (m.omega_x * t).sin() / m.omega_x, epsilon = 1e-9);
            assert!(dq.y.abs() < 1e-15);
        }
        assert!(b.wronskian[1].1 > 0.0);
    }

    #[test]
    fn rectangle_caustic_for_separable_model() {
        let m = HamiltonianModel::uncoupled();
        let (a, b) = (1.4, 0.9);
        let e = m.potential(Point::new(a, b));
        let (_, cloud) = trace_family(&m, e, b.atan2(a), DEFAULT_T_MAX, DEFAULT_STEP).unwrap();
        assert!(cloud.points.len() > 100);
        for c in &cloud.points {
            let d = (c.q.x.abs() - a).abs().min((c.q.y.abs() - b).abs());
            assert!(d < 1e-3, "point {c:?} off the rectangle");
            assert!(m.potential(c.q) <= e + 1e-9);
        }
        // an irrational frequency ratio makes the trajectory fill the rectangle
        let m = HamiltonianModel::new(2f64.sqrt(), 1.0, 0.0).unwrap();
        let e = m.potential(Point::new(a, b));
        let (tr, _) = trace_family(&m, e, b.atan2(a), 2000.0, DEFAULT_STEP).unwrap();
        let env = envelope_oracle(&tr, 200);
        assert!(!env.under_covered);
        for p in &env.points {
            let d = (p.x.abs() - a).abs().min((p.y.abs() - b).abs());
            assert!(d <= env.cell, "boundary cell {p:?} off the rectangle");
        }
    }
}
