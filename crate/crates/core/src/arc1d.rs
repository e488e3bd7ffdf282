//! The one-dimensional Schrödinger problem along a caustic arc,
//! `−ħ²/(2m) g⁻¹ d/dt (g⁻¹ dψ/dt) + U_k ψ = E ψ`, and the quantum action
//! `W_Q = X + iY` reconstructed from two real solutions.

use crate::caustic::{turning_points, ArcFit};
use crate::error::{Error, Result};
use crate::model::HamiltonianModel;
use crate::numerics::{integrate, integrate_endpoint_sqrt};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

pub const DEFAULT_GRID: usize = 2000;
/// Required `∫ κ g dt` over each continuation, so the decaying branch starts
/// `e^{-14} ≈ 1e−6` below its size at the turning point.
pub const DEFAULT_DECAY: f64 = 14.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcProblem {
    pub arc: ArcFit,
    pub model: HamiltonianModel,
    pub energy: f64,
    pub grid: Vec<f64>,
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub turning_points: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSolution {
    /// Branch decaying into the left continuation, normalized on the allowed segment.
    pub psi: Vec<f64>,
    /// `ψ′/g` for `psi`.
    pub phi: Vec<f64>,
    pub psi_aux: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Analytic `X′ = ħ g w₀ / (u² + v²)`.
    pub x_prime: Vec<f64>,
    pub nodes: usize,
    pub delta_x: f64,
    /// `sin(θ_L − θ_R)`: normalized cross-Wronskian of the two decaying branches.
    pub defect: f64,
    /// `(θ_L − θ_R)/π`; an integer exactly at a regular solution, equal to its node count.
    pub phase_index: f64,
    pub norm: f64,
    pub match_index: usize,
    /// Invariant `v φ_u − u φ_v` of the pair used for the phase.
    pub w0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumAction {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub psi_aux: Vec<f64>,
    pub delta_x: f64,
    pub w0: f64,
}

impl ArcProblem {
    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// `2m(E − U_k) g / ħ²` at parameter `t`.
    fn k2(&self, t: f64) -> f64 {
        let m = &self.model;
        2.0 * m.mass * (self.energy - self.arc.potential(m, t)) * self.arc.scale_factor(t) / (m.hbar * m.hbar)
    }

    fn decay_rate(&self, t: f64) -> f64 {
        let m = &self.model;
        (2.0 * m.mass * (self.arc.potential(m, t) - self.energy)).max(0.0).sqrt() / m.hbar
    }

    /// Grid indices strictly inside the allowed segment.
    pub fn allowed_range(&self) -> std::ops::Range<usize> {
        let (t1, t2) = self.turning_points;
        let a = self.grid.partition_point(|&t| t <= t1);
        let b = self.grid.partition_point(|&t| t < t2);
        a..b
    }

    /// Indices covering the central `fraction` of the allowed segment.
    pub fn inner_range(&self, fraction: f64) -> std::ops::Range<usize> {
        let (t1, t2) = self.turning_points;
        let pad = 0.5 * (1.0 - fraction) * (t2 - t1);
        let a = self.grid.partition_point(|&t| t < t1 + pad);
        let b = self.grid.partition_point(|&t| t <= t2 - pad);
        a..b
    }
}

pub fn build_arc_problem(model: &HamiltonianModel, arc: &ArcFit, energy: f64, n_grid: usize) -> Result<ArcProblem> {
    build_arc_problem_with(model, arc, energy, n_grid, DEFAULT_DECAY)
}

/// Samples `g` and `U_k` on a uniform grid reaching past each turning point
/// until the decay integral `∫ κ g dt` of the continuation reaches `decay`.
pub fn build_arc_problem_with(model: &HamiltonianModel, arc: &ArcFit, energy: f64, n_grid: usize, decay: f64) -> Result<ArcProblem> {
    if n_grid < 200 {
        return Err(Error::InvalidArgument(format!("n_grid must be at least 200, got {n_grid}")));
    }
    let (t1, t2) = turning_points(model, arc, energy)?;
    let reach = arc.extension;
    let dt = (t2 - t1) / 400.0;
    let extend = |from: f64, dir: f64| -> Result<f64> {
        let mut t = from;
        let mut acc = 0.0;
        while acc < decay {
            let next = t + dir * dt;
            if (next - from).abs() > reach {
                return Err(Error::ExtensionTooShort { arc: arc.index });
            }
            let excess = |s: f64| arc.potential(model, s) - energy;
            if excess(next) <= 0.0 {
                return Err(Error::ExtensionTooShort { arc: arc.index });
            }
            acc += integrate(
                |s| (2.0 * model.mass * excess(s).max(0.0)).sqrt() / model.hbar * arc.scale_factor(s),
                t.min(next),
                t.max(next),
                1e-10,
            );
            t = next;
        }
        Ok(t)
    };
    let a = extend(t1, -1.0)?;
    let b = extend(t2, 1.0)?;
    let grid: Vec<f64> = (0..n_grid).map(|i| a + (b - a) * i as f64 / (n_grid - 1) as f64).collect();
    let g = grid.iter().map(|&t| arc.scale_factor(t)).collect();
    let u = grid.iter().map(|&t| arc.potential(model, t)).collect();
    Ok(ArcProblem { arc: arc.clone(), model: *model, energy, grid, g, u, turning_points: (t1, t2) })
}

/// Classical RK4 for `ψ′ = gφ`, `φ′ = −k ψ` from grid node `from` towards
/// `to`, with coefficients evaluated exactly at the half steps.
fn shoot(p: &ArcProblem, from: usize, to: usize, init: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let n = p.grid.len();
    let mut psi = vec![0.0; n];
    let mut phi = vec![0.0; n];
    let (mut y, mut z) = init;
    psi[from] = y;
    phi[from] = z;
    let step: isize = if to >= from { 1 } else { -1 };
    let h = p.spacing() * step as f64;
    let mut i = from;
    while i != to {
        let t = p.grid[i];
        let tm = t + 0.5 * h;
        let next = (i as isize + step) as usize;
        let (g0, gm, g1) = (p.g[i], p.arc.scale_factor(tm), p.g[next]);
        let (k0, km, k1) = (p.k2(t), p.k2(tm), p.k2(p.grid[next]));
        let (a1, b1) = (g0 * z, -k0 * y);
        let (a2, b2) = (gm * (z + 0.5 * h * b1), -km * (y + 0.5 * h * a1));
        let (a3, b3) = (gm * (z + 0.5 * h * b2), -km * (y + 0.5 * h * a2));
        let (a4, b4) = (g1 * (z + h * b3), -k1 * (y + h * a3));
        y += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        z += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        i = next;
        if y.abs() + z.abs() > 1e100 {
            let mut j = from;
            loop {
                psi[j] *= 1e-100;
                phi[j] *= 1e-100;
                if j == i {
                    break;
                }
                j = (j as isize + step) as usize;
            }
            y *= 1e-100;
            z *= 1e-100;
        }
        psi[i] = y;
        phi[i] = z;
    }
    (psi, phi)
}

fn unwrap_from(angles: &mut [f64], forward: bool) {
    let n = angles.len();
    let idx: Vec<usize> = if forward { (0..n).collect() } else { (0..n).rev().collect() };
    for w in idx.windows(2) {
        let (prev, cur) = (angles[w[0]], angles[w[1]]);
        let d = cur - prev;
        angles[w[1]] = prev + (d + PI).rem_euclid(2.0 * PI) - PI;
    }
}

/// Hermite interpolation of a solution `(ψ, φ = ψ′/g)` at parameter `t`.
fn interp(p: &ArcProblem, psi: &[f64], phi: &[f64], t: f64) -> (f64, f64) {
    let h = p.spacing();
    let i = (((t - p.grid[0]) / h).floor() as usize).min(p.grid.len() - 2);
    let tau = (t - p.grid[i]) / h;
    let (y0, y1) = (psi[i], psi[i + 1]);
    let (d0, d1) = (p.g[i] * phi[i], p.g[i + 1] * phi[i + 1]);
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + tau) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1;
    let der = ((6.0 * t2 - 6.0 * tau) * y0 + (3.0 * t2 - 4.0 * tau + 1.0) * h * d0 + (-6.0 * t2 + 6.0 * tau) * y1 + (3.0 * t2 - 2.0 * tau) * h * d1) / h;
    (val, der / p.arc.scale_factor(t))
}

/// Two-sided shooting with decaying data at both grid ends.
pub fn solve_arc(p: &ArcProblem) -> Result<ArcSolution> {
    let n = p.grid.len();
    let (t1, t2) = p.turning_points;
    let (ka, kb) = (p.decay_rate(p.grid[0]), p.decay_rate(p.grid[n - 1]));
    if !(ka > 0.0 && kb > 0.0) {
        return Err(Error::ExtensionTooShort { arc: p.arc.index });
    }
    let (psi_l, phi_l) = shoot(p, 0, n - 1, (1.0, ka));
    let (psi_r, phi_r) = shoot(p, n - 1, 0, (1.0, -kb));

    let tm = 0.5 * (t1 + t2);
    let im = ((tm - p.grid[0]) / p.spacing()).round() as usize;
    let m = &p.model;
    let kref = (2.0 * m.mass * (p.energy - p.u[im])).max(1e-6 * p.energy.abs().max(1.0)).sqrt() / m.hbar;
    let prufer = |psi: &[f64], phi: &[f64]| -> Vec<f64> { psi.iter().zip(phi).map(|(&y, &z)| y.atan2(z / kref)).collect() };
    let mut th_l = prufer(&psi_l, &phi_l);
    let mut th_r = prufer(&psi_r, &phi_r);
    unwrap_from(&mut th_l, true);
    unwrap_from(&mut th_r, false);
    let diff = th_l[im] - th_r[im];
    let phase_index = diff / PI;
    let defect = diff.sin();

    let mut psi = psi_l;
    let mut phi = phi_l;

    let range = p.allowed_range();
    let h = p.spacing();
    let norm = range.clone().map(|i| psi[i] * psi[i] * p.g[i] * h).sum::<f64>().sqrt();
    let first = psi[range.start.min(n - 1)];
    let scale = if first < 0.0 { -1.0 / norm } else { 1.0 / norm };
    psi.iter_mut().for_each(|v| *v *= scale);
    phi.iter_mut().for_each(|v| *v *= scale);
    let nodes = count_nodes(&psi[range]);

    let mut sol = ArcSolution {
        psi,
        phi,
        psi_aux: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        x_prime: Vec::new(),
        nodes,
        delta_x: 0.0,
        defect,
        phase_index,
        norm,
        match_index: im,
        w0: 0.0,
    };
    let qa = quantum_action(&sol, p)?;
    sol.psi_aux = qa.psi_aux;
    sol.x = qa.x;
    sol.y = qa.y;
    sol.x_prime = qa.x_prime;
    sol.delta_x = qa.delta_x;
    sol.w0 = qa.w0;
    Ok(sol)
}

fn count_nodes(v: &[f64]) -> usize {
    let mut last = 0.0;
    let mut count = 0;
    for &x in v {
        if x != 0.0 {
            if last != 0.0 && (x > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = x;
        }
    }
    count
}

/// Real and imaginary parts of the quantum action from `u = ψ` and a second
/// solution `v` fixed by `v(t₁) = u(t₁)`, `v(t₂) = −u(t₂)`, so that
/// `X(t₁) = 0` and `ψ ∝ sin(X/ħ + π/4)/√(X′/g)` holds on the whole arc.
pub fn quantum_action(sol: &ArcSolution, p: &ArcProblem) -> Result<QuantumAction> {
    let n = p.grid.len();
    let im = sol.match_index;
    let hbar = p.model.hbar;
    let m = &p.model;
    let kref = (2.0 * m.mass * (p.energy - p.u[im])).max(1e-6 * p.energy.abs().max(1.0)).sqrt() / m.hbar;
    let init = (-sol.phi[im] / kref, kref * sol.psi[im]);
    let (mut v0, mut dv0) = shoot(p, im, n - 1, init);
    let (v0l, dv0l) = shoot(p, im, 0, init);
    v0[..im].copy_from_slice(&v0l[..im]);
    dv0[..im].copy_from_slice(&dv0l[..im]);

    let (t1, t2) = p.turning_points;
    let (u1, _) = interp(p, &sol.psi, &sol.phi, t1);
    let (u2, _) = interp(p, &sol.psi, &sol.phi, t2);
    let (a1, _) = interp(p, &v0, &dv0, t1);
    let (a2, _) = interp(p, &v0, &dv0, t2);
    // α v0 + β u:  α a1 + β u1 = u1,  α a2 + β u2 = −u2
    let det = a1 * u2 - a2 * u1;
    if det.abs() < 1e-300 || !det.is_finite() {
        return Err(Error::Numerical(format!("arc {}: auxiliary solution is degenerate", p.arc.index)));
    }
    let alpha = (u1 * u2 + u2 * u1) / det;
    let beta = (-a1 * u2 - a2 * u1) / det;
    let v: Vec<f64> = (0..n).map(|i| alpha * v0[i] + beta * sol.psi[i]).collect();
    let dv: Vec<f64> = (0..n).map(|i| alpha * dv0[i] + beta * sol.phi[i]).collect();
    let w0 = v[im] * sol.phi[im] - sol.psi[im] * dv[im];
    let sign = if w0 < 0.0 { -1.0 } else { 1.0 };

    let mut arg: Vec<f64> = (0..n).map(|i| (sign * sol.psi[i]).atan2(v[i])).collect();
    unwrap_from(&mut arg, true);
    let anchor = |t: f64| {
        let (uu, _) = interp(p, &sol.psi, &sol.phi, t);
        let (vv, _) = interp(p, &v, &dv, t);
        let raw = (sign * uu).atan2(vv);
        let i = (((t - p.grid[0]) / p.spacing()).round() as usize).min(n - 1);
        raw + ((arg[i] - raw) / (2.0 * PI)).round() * 2.0 * PI
    };
    let (arg1, arg2) = (anchor(t1), anchor(t2));
    let x: Vec<f64> = arg.iter().map(|a| hbar * (a - arg1)).collect();
    let x_prime: Vec<f64> = (0..n)
        .map(|i| hbar * p.g[i] * w0.abs() / (sol.psi[i] * sol.psi[i] + v[i] * v[i]))
        .collect();
    let y: Vec<f64> = (0..n).map(|i| hbar * (x_prime[i] / p.g[i]).sqrt().ln()).collect();
    Ok(QuantumAction { x, y, x_prime, psi_aux: v, delta_x: hbar * (arg2 - arg1), w0 })
}

/// The two sides of the real-part quantum Hamilton–Jacobi equation in the arc
/// parameter, `(3ħ²g′²X′² + 4g²X′⁴ − 3ħ²g²X″² + 2ħ²g²X′X‴ − 2ħ²gg″X′², 8m(E−U)g⁴X′²)`.
#[allow(clippy::too_many_arguments)]
pub fn qhje_sides(hbar: f64, mass: f64, e_minus_u: f64, g: f64, gp: f64, gpp: f64, x1: f64, x2: f64, x3: f64) -> (f64, f64) {
    let h2 = hbar * hbar;
    let lhs = 3.0 * h2 * gp * gp * x1 * x1 + 4.0 * g * g * x1.powi(4) - 3.0 * h2 * g * g * x2 * x2 + 2.0 * h2 * g * g * x1 * x3
        - 2.0 * h2 * g * gpp * x1 * x1;
    (lhs, 8.0 * mass * e_minus_u * g.powi(4) * x1 * x1)
}

/// `g`, `g′`, `g″` of the arc at `t`.
fn scale_derivatives(arc: &ArcFit, t: f64) -> (f64, f64, f64) {
    let [_, d1, d2] = arc.f3(t);
    let d3 = arc.spline.third(t);
    let g = d1.hypot(1.0);
    let gp = d1 * d2 / g;
    let gpp = (d2 * d2 + d1 * d3) / g - d1 * d1 * d2 * d2 / g.powi(3);
    (g, gp, gpp)
}

/// Largest relative mismatch of the quantum Hamilton–Jacobi equation on the
/// central 60% of the allowed segment, with centred finite differences of `x`.
pub fn qhje_residual(x: &[f64], p: &ArcProblem) -> f64 {
    let h = p.spacing();
    let range = p.inner_range(0.6);
    let n = x.len();
    let mut worst: f64 = 0.0;
    for i in range.start.max(2)..range.end.min(n - 2) {
        let x1 = (x[i + 1] - x[i - 1]) / (2.0 * h);
        let x2 = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / (h * h);
        let x3 = (x[i + 2] - 2.0 * x[i + 1] + 2.0 * x[i - 1] - x[i - 2]) / (2.0 * h * h * h);
        let (g, gp, gpp) = scale_derivatives(&p.arc, p.grid[i]);
        let (l, r) = qhje_sides(p.model.hbar, p.model.mass, p.energy - p.u[i], g, gp, gpp, x1, x2, x3);
        worst = worst.max((l - r).abs() / l.abs().max(r.abs()));
    }
    worst
}

/// The same check for the classical action `W′ = g√(2m(E−U))` with `ħ = 0`.
pub fn classical_limit_residual(p: &ArcProblem) -> f64 {
    let mut worst: f64 = 0.0;
    for i in p.inner_range(0.6) {
        let w1 = p.g[i] * (2.0 * p.model.mass * (p.energy - p.u[i])).sqrt();
        let (g, gp, gpp) = scale_derivatives(&p.arc, p.grid[i]);
        let (l, r) = qhje_sides(0.0, p.model.mass, p.energy - p.u[i], g, gp, gpp, w1, 0.0, 0.0);
        worst = worst.max((l - r).abs() / l.abs().max(r.abs()));
    }
    worst
}

/// Classical action along the arc from the left turning point,
/// `W_C(t) = ∫_{t₁}^{t} √(2m(E − U_k)) g dt`, on the grid (zero left of `t₁`,
/// constant right of `t₂`).
pub fn classical_action(p: &ArcProblem) -> Vec<f64> {
    let (t1, t2) = p.turning_points;
    let m = &p.model;
    let f = |t: f64| (2.0 * m.mass * (p.energy - p.arc.potential(m, t))).max(0.0).sqrt() * p.arc.scale_factor(t);
    let mut out = Vec::with_capacity(p.grid.len());
    let mut acc = 0.0;
    let mut last = t1;
    for &t in &p.grid {
        if t <= t1 {
            out.push(0.0);
            continue;
        }
        let upto = t.min(t2);
        if upto > last {
            acc += if last == t1 || upto == t2 {
                integrate_endpoint_sqrt(f, last, upto, 1e-12)
            } else {
                integrate(f, last, upto, 1e-12)
            };
            last = upto;
        }
        out.push(acc);
    }
    out
}

/// Largest deviation of `ψ` from `A sin(X/ħ + π/4)/√(X′/g)` (best `A`) on the
/// central 90% of the allowed segment, relative to `max |ψ|` there.
pub fn wkb_form_check(sol: &ArcSolution, p: &ArcProblem) -> f64 {
    let range = p.inner_range(0.9);
    let hbar = p.model.hbar;
    let model: Vec<f64> = range
        .clone()
        .map(|i| (sol.x[i] / hbar + FRAC_PI_4).sin() / (sol.x_prime[i] / p.g[i]).sqrt())
        .collect();
    let psi = &sol.psi[range];
    let amp = psi.iter().zip(&model).map(|(a, b)| a * b).sum::<f64>() / model.iter().map(|b| b * b).sum::<f64>();
    let peak = psi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    psi.iter().zip(&model).map(|(a, b)| (amp * b - a).abs()).fold(0.0, f64::max) / peak
}

/// Normalized cross-correlation `Σab / √(Σa² Σb²)`.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab / (aa * bb).sqrt()
}
