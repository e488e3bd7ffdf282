//! Reference results by diagonalizing the Hamiltonian in a truncated product
//! harmonic-oscillator basis, plus separable-case action surfaces.

use crate::arc1d::{build_arc_problem, quantum_action, solve_arc, DEFAULT_GRID};
use crate::caustic::{ArcAxis, ArcFit};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::model::HamiltonianModel;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const DEFAULT_N_MAX: usize = 30;

/// All product states `|i, j⟩` with `i + j ≤ n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub n_max: usize,
    pub omega_x: f64,
    pub omega_y: f64,
}

impl BasisSpec {
    pub fn for_model(model: &HamiltonianModel, n_max: usize) -> Self {
        Self { n_max, omega_x: model.omega_x, omega_y: model.omega_y }
    }

    pub fn size(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 2) / 2
    }

    /// Position of `|i, j⟩`: shells of equal `i + j`, `i` ascending within a shell.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        let shell = i + j;
        (shell <= self.n_max).then(|| shell * (shell + 1) / 2 + i)
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        let mut shell = 0;
        while (shell + 1) * (shell + 2) / 2 <= index {
            shell += 1;
        }
        let i = index - shell * (shell + 1) / 2;
        (i, shell - i)
    }
}

/// Eigenvalues ascending; eigenvector `k` is column `k` of `vectors`
/// (column-major, `size × size`).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub basis: BasisSpec,
    pub model: HamiltonianModel,
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<f64>,
    /// Quantum numbers of the dominant basis component of each eigenvector.
    pub labels: Vec<(usize, usize)>,
    /// Per state: stable to `1e−5` against a basis six shells smaller. Empty
    /// unless requested through [`solve_checked`].
    pub converged: Vec<bool>,
}

impl OracleResult {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.size();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// First state carrying label `(m, n)`.
    pub fn find_label(&self, label: (usize, usize)) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

/// Dense symmetric Hamiltonian matrix, row-major.
pub fn build_matrix(model: &HamiltonianModel, basis: &BasisSpec) -> Result<Vec<f64>> {
    model.validate()?;
    let n = basis.size();
    let hbar = model.hbar;
    let sx = hbar / (2.0 * model.mass * basis.omega_x);
    let sy = (hbar / (2.0 * model.mass * basis.omega_y)).sqrt();
    // ⟨i′|x²|i⟩ and ⟨j′|y|j⟩ in each oscillator's own basis
    let x2 = |ip: usize, i: usize| -> f64 {
        let (lo, hi) = (ip.min(i), ip.max(i));
        match hi - lo {
            0 => sx * (2 * i + 1) as f64,
            2 => sx * (((lo + 1) * (lo + 2)) as f64).sqrt(),
            _ => 0.0,
        }
    };
    let y1 = |jp: usize, j: usize| -> f64 {
        let (lo, hi) = (jp.min(j), jp.max(j));
        if hi - lo == 1 {
            sy * (hi as f64).sqrt()
        } else {
            0.0
        }
    };
    // potential of the basis itself, when its frequencies differ from the model's
    let dx = 0.5 * model.mass * (model.omega_x.powi(2) - basis.omega_x.powi(2));
    let dy = 0.5 * model.mass * (model.omega_y.powi(2) - basis.omega_y.powi(2));
    let y2 = |jp: usize, j: usize| -> f64 {
        let s = sy * sy;
        let (lo, hi) = (jp.min(j), jp.max(j));
        match hi - lo {
            0 => s * (2 * j + 1) as f64,
            2 => s * (((lo + 1) * (lo + 2)) as f64).sqrt(),
            _ => 0.0,
        }
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let (ip, jp) = basis.state(r);
            (0..n)
                .map(|c| {
                    let (i, j) = basis.state(c);
                    let mut h = 0.0;
                    if i == ip && j == jp {
                        h += hbar * (basis.omega_x * (i as f64 + 0.5) + basis.omega_y * (j as f64 + 0.5));
                    }
                    if j == jp {
                        h += dx * x2(ip, i);
                    }
                    if i == ip {
                        h += dy * y2(jp, j);
                    }
                    h + model.lambda * x2(ip, i) * y1(jp, j)
                })
                .collect()
        })
        .collect();
    Ok(rows.concat())
}

/// Symmetric eigendecomposition of a row-major `n × n` matrix by Householder
/// tridiagonalization and implicit QL iterations. Returns ascending eigenvalues
/// and column-major eigenvectors.
pub fn diagonalize(matrix: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.len() != n * n {
        return Err(Error::InvalidArgument(format!("matrix has {} entries, expected {}", matrix.len(), n * n)));
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut v = matrix.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e, n);
    ql_implicit(&mut v, &mut d, &mut e, n)?;
    // v is row-major with eigenvectors in columns; transpose to column-major storage
    let mut cols = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            cols[c * n + r] = v[r * n + c];
        }
    }
    Ok((d, cols))
}

fn tridiagonalize(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let at = |r: usize, c: usize| r * n + c;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for x in e.iter_mut().take(i) {
                *x = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    // accumulate the transformations
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn ql_implicit(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    let at = |r: usize, c: usize| r * n + c;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 100 {
                    return Err(Error::Numerical(format!("eigenvalue {l} did not converge in 100 QL sweeps")));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d.iter_mut().skip(l + 2) {
                    *x -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[at(k, i + 1)];
                        v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                        v[at(k, i)] = c * v[at(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    for i in 0..n - 1 {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for r in 0..n {
                v.swap(at(r, i), at(r, k));
            }
        }
    }
    Ok(())
}

pub fn solve(model: &HamiltonianModel, n_max: usize) -> Result<OracleResult> {
    let basis = BasisSpec::for_model(model, n_max);
    let n = basis.size();
    let matrix = build_matrix(model, &basis)?;
    let (eigenvalues, vectors) = diagonalize(&matrix, n)?;
    let labels = (0..n)
        .map(|k| {
            let col = &vectors[k * n..(k + 1) * n];
            let best = (0..n).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap_or(0);
            basis.state(best)
        })
        .collect();
    Ok(OracleResult { basis, model: *model, eigenvalues, vectors, labels, converged: Vec::new() })
}

/// [`solve`] plus convergence flags for the lowest `requested` states.
pub fn solve_checked(model: &HamiltonianModel, n_max: usize, requested: usize) -> Result<OracleResult> {
    let mut full = solve(model, n_max)?;
    let smaller = solve(model, n_max.saturating_sub(6))?;
    full.converged = (0..requested.min(full.size()))
        .map(|k| smaller.eigenvalues.get(k).is_some_and(|&e| (e - full.eigenvalues[k]).abs() <= 1e-5))
        .collect();
    Ok(full)
}

/// Normalized oscillator eigenfunctions `h_0 … h_{count−1}` at `x` for
/// frequency `omega`, by the stable three-term recurrence.
pub fn hermite_functions(count: usize, x: f64, omega: f64, mass: f64, hbar: f64) -> Vec<f64> {
    let alpha = mass * omega / hbar;
    let xi = alpha.sqrt() * x;
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push((alpha / PI).powf(0.25) * (-0.5 * xi * xi).exp());
    if count > 1 {
        out.push(2f64.sqrt() * xi * out[0]);
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// `ψ_k(q)` for eigenstate `k`.
pub fn eigenstate_value(result: &OracleResult, k: usize, q: Point) -> Result<f64> {
    if k >= result.size() {
        return Err(Error::InvalidArgument(format!("state index {k} beyond basis size {}", result.size())));
    }
    let b = &result.basis;
    let m = &result.model;
    let hx = hermite_functions(b.n_max + 1, q.x, b.omega_x, m.mass, m.hbar);
    let hy = hermite_functions(b.n_max + 1, q.y, b.omega_y, m.mass, m.hbar);
    let col = result.vector(k);
    Ok(col.iter().enumerate().map(|(idx, c)| {
        let (i, j) = b.state(idx);
        c * hx[i] * hy[j]
    }).sum())
}

/// `ψ_k` sampled along `arc` at the given parameter values, scaled to unit
/// maximum amplitude.
pub fn restrict_to_arc(result: &OracleResult, k: usize, arc: &ArcFit, grid: &[f64]) -> Result<Vec<f64>> {
    let raw: Vec<f64> = grid.iter().map(|&t| eigenstate_value(result, k, arc.point(t))).collect::<Result<_>>()?;
    let peak = raw.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if !(peak > 0.0) {
        return Ok(raw);
    }
    Ok(raw.into_iter().map(|v| v / peak).collect())
}

/// Quantum and classical action over a rectangular grid around `Ω_F`.
/// Cells outside `Ω_F` hold `None`. Both actions vanish at the lower-left corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSurface {
    pub state: (usize, usize),
    /// Half-widths of `Ω_F`.
    pub extent: (f64, f64),
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major, `ys.len()` rows of `xs.len()`.
    pub quantum: Vec<Option<f64>>,
    pub classical: Vec<Option<f64>>,
}

/// One axis of the separable problem: the quantum action `X` on a fine grid
/// and the closed-form classical action from the left turning point.
struct AxisAction {
    grid: Vec<f64>,
    x: Vec<f64>,
    amplitude: f64,
    scale: f64,
}

impl AxisAction {
    fn quantum(&self, t: f64) -> f64 {
        let h = self.grid[1] - self.grid[0];
        let pos = ((t - self.grid[0]) / h).clamp(0.0, (self.grid.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let w = pos - i as f64;
        self.x[i] * (1.0 - w) + self.x[i + 1] * w
    }

    /// `mω/2 [t√(a²−t²) + a² asin(t/a)]` measured from `t = −a`.
    fn classical(&self, t: f64) -> f64 {
        let a = self.amplitude;
        let t = t.clamp(-a, a);
        let prim = |t: f64| t * (a * a - t * t).max(0.0).sqrt() + a * a * (t / a).asin();
        0.5 * self.scale * (prim(t) - prim(-a))
    }
}

fn axis_action(model: &HamiltonianModel, axis: ArcAxis, quanta: usize, n_grid: usize) -> Result<AxisAction> {
    let omega = match axis {
        ArcAxis::YOfX => model.omega_x,
        ArcAxis::XOfY => model.omega_y,
    };
    let energy = model.hbar * omega * (quanta as f64 + 0.5);
    let amplitude = (2.0 * energy / (model.mass * omega * omega)).sqrt();
    let index = if axis == ArcAxis::YOfX { 2 } else { 1 };
    let arc = ArcFit::line(index, axis, 0.0, (-amplitude, amplitude), 8.0 * amplitude);
    let p = build_arc_problem(model, &arc, energy, n_grid)?;
    let sol = solve_arc(&p)?;
    let qa = quantum_action(&sol, &p)?;
    Ok(AxisAction { grid: p.grid, x: qa.x, amplitude, scale: model.mass * omega })
}

/// `X(x, y) = X_x(x) + X_y(y)` and `W_C(x, y)` for the separable state `(m, n)`
/// on an `nx × ny` grid spanning `(1 + margin)` times the rectangle `Ω_F`.
pub fn separable_action_surface(model: &HamiltonianModel, state: (usize, usize), nx: usize, ny: usize, margin: f64) -> Result<ActionSurface> {
    model.validate()?;
    if !model.is_separable() {
        return Err(Error::NotSeparable(model.lambda));
    }
    if nx < 2 || ny < 2 || !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("surface grid needs at least 2×2 points and margin ≥ 0, got {nx}×{ny}, {margin}")));
    }
    let ax = axis_action(model, ArcAxis::YOfX, state.0, DEFAULT_GRID)?;
    let ay = axis_action(model, ArcAxis::XOfY, state.1, DEFAULT_GRID)?;
    let (a, b) = (ax.amplitude, ay.amplitude);
    let span = |half: f64, count: usize| -> Vec<f64> {
        let w = half * (1.0 + margin);
        (0..count).map(|i| -w + 2.0 * w * i as f64 / (count - 1) as f64).collect()
    };
    let xs = span(a, nx);
    let ys = span(b, ny);
    let inside = |x: f64, y: f64| x.abs() <= a * (1.0 + 1e-12) && y.abs() <= b * (1.0 + 1e-12);
    let mut quantum = Vec::with_capacity(nx * ny);
    let mut classical = Vec::with_capacity(nx * ny);
    for &y in &ys {
        for &x in &xs {
            if inside(x, y) {
                quantum.push(Some(ax.quantum(x) + ay.quantum(y)));
                classical.push(Some(ax.classical(x) + ay.classical(y)));
            } else {
                quantum.push(None);
                classical.push(None);
            }
        }
    }
    Ok(ActionSurface { state, extent: (a, b), xs, ys, quantum, classical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basis_indexing_round_trips() {
        let b = BasisSpec { n_max: 7, omega_x: 1.1, omega_y: 1.0 };
        assert_eq!(b.size(), 36);
        for k in 0..b.size() {
            let (i, j) = b.state(k);
            assert!(i + j <= 7);
            assert_eq!(b.index(i, j), Some(k));
        }
        assert_eq!(b.index(4, 4), None);
    }

    #[test]
    fn decoupled_matrix_is_diagonal() {
        let m = HamiltonianModel::uncoupled();
        let b = BasisSpec::for_model(&m, 6);
        let h = build_matrix(&m, &b).unwrap();
        let n = b.size();
        for r in 0..n {
            for c in 0..n {
                if r == c {
                    let (i, j) = b.state(r);
                    assert_relative_eq!(h[r * n + c], m.separable_spectrum(i, j).unwrap(), epsilon = 1e-14);
                } else {
                    assert_eq!(h[r * n + c], 0.0);
                }
            }
        }
    }

    #[test]
    fn coupled_matrix_is_exactly_symmetric() {
        let m = HamiltonianModel::barbanis();
        let b = BasisSpec::for_model(&m, 12);
        let h = build_matrix(&m, &b).unwrap();
        let n = b.size();
        for r in 0..n {
            for c in 0..r {
                assert_eq!(h[r * n + c], h[c * n + r]);
            }
        }
        // ⟨0,1|H|0,0⟩ = λ ⟨0|x²|0⟩ ⟨1|y|0⟩
        let expected = m.lambda * (0.5 / m.omega_x) * (0.5 / m.omega_y).sqrt();
        assert_relative_eq!(h[b.index(0, 1).unwrap()], expected, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_input_returns_sorted_diagonal() {
        let diag = [3.5, -1.0, 2.25, 0.0, 7.0];
        let n = diag.len();
        let mut a = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            a[i * n + i] = d;
        }
        let (vals, _) = diagonalize(&a, n).unwrap();
        assert_eq!(vals, vec![-1.0, 0.0, 2.25, 3.5, 7.0]);
    }

    #[test]
    fn eigenpairs_satisfy_the_matrix_equation() {
        let n = 9;
        let a: Vec<f64> = (0..n * n)
            .map(|k| {
                let (r, c) = (k / n, k % n);
                1.0 / (1.0 + r as f64 + c as f64) + if r == c { r as f64 } else { 0.0 }
            })
            .collect();
        let (vals, vecs) = diagonalize(&a, n).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for k in 0..n {
            let v = &vecs[k * n..(k + 1) * n];
            for r in 0..n {
                let av: f64 = (0..n).map(|c| a[r * n + c] * v[c]).sum();
                assert!((av - vals[k] * v[r]).abs() < 1e-12);
            }
            for l in 0..n {
                let dot: f64 = (0..n).map(|r| v[r] * vecs[l * n + r]).sum();
                assert!((dot - if k == l { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(diagonalize(&a, n + 1).is_err());
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let count = 11;
        let (lo, hi, steps) = (-12.0, 12.0, 24000);
        let h = (hi - lo) / steps as f64;
        let mut gram = vec![0.0; count * count];
        for s in 0..=steps {
            let x = lo + s as f64 * h;
            let w = if s == 0 || s == steps { 0.5 * h } else { h };
            let f = hermite_functions(count, x, 1.3, 1.0, 1.0);
            for i in 0..count {
                for j in 0..count {
                    gram[i * count + j] += w * f[i] * f[j];
                }
            }
        }
        for i in 0..count {
            for j in 0..count {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((gram[i * count + j] - target).abs() < 1e-8, "({i},{j}) {}", gram[i * count + j]);
            }
        }
    }

    #[test]
    fn separable_ground_state_peak() {
        let m = HamiltonianModel::uncoupled();
        let r = solve(&m, 4).unwrap();
        let peak = (m.omega_x * m.omega_y).powf(0.25) / PI.sqrt();
        assert_relative_eq!(eigenstate_value(&r, 0, Point::new(0.0, 0.0)).unwrap().abs(), peak, epsilon = 1e-14);
        assert_eq!(r.labels[0], (0, 0));
        assert!(eigenstate_value(&r, r.size(), Point::default()).is_err());
    }

    #[test]
    fn separable_corner_action() {
        let m = HamiltonianModel::uncoupled();
        let s = separable_action_surface(&m, (2, 2), 41, 31, 0.1).unwrap();
        let (a, b) = m.separable_amplitudes(2, 2);
        assert_relative_eq!(s.extent.0, a, epsilon = 1e-12);
        assert_relative_eq!(s.extent.1, b, epsilon = 1e-12);
        assert!(s.classical[0].is_none() && s.quantum[0].is_none());
        let ax = axis_action(&m, ArcAxis::YOfX, 2, DEFAULT_GRID).unwrap();
        let ay = axis_action(&m, ArcAxis::XOfY, 2, DEFAULT_GRID).unwrap();
        assert_relative_eq!(ax.classical(a) + ay.classical(b), PI * 5.0, epsilon = 1e-10);
        assert_relative_eq!(ax.classical(-a) + ay.classical(-b), 0.0, epsilon = 1e-12);
        assert!(separable_action_surface(&HamiltonianModel::barbanis(), (2, 2), 10, 10, 0.0).is_err());
    }
}
