//! Small numerical kernels shared by the pipeline: adaptive quadrature,
//! bracketing root finders, and penalized least-squares cubic splines.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature to an absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut stack = vec![(a, b, abs_tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, tol, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        if err <= tol || depth >= 48 || (hi - lo).abs() < 1e-14 * (1.0 + lo.abs()) {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * tol, depth + 1));
            stack.push((lo, mid, 0.5 * tol, depth + 1));
        }
    }
    total
}

/// `∫_a^b f` for integrands with square-root behaviour at both ends,
/// using the substitution `x = a + (b−a)(1−cos θ)/2`.
pub fn integrate_endpoint_sqrt<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    integrate(|th: f64| f(a + half * (1.0 - th.cos())) * half * th.sin(), 0.0, std::f64::consts::PI, abs_tol)
}

/// Bisection on a sign-changing bracket, to an absolute tolerance in the argument.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Uniform cubic B-spline `f(t) = Σ c_j B_j(t)` on `[start, start + spacing·intervals]`,
/// continued beyond both ends by its second-order Taylor polynomial (so it stays C²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    pub start: f64,
    pub spacing: f64,
    pub coefficients: Vec<f64>,
}

fn basis(u: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let u2 = u * u;
    let u3 = u2 * u;
    let v = 1.0 - u;
    (
        [v * v * v / 6.0, (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0, (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0, u3 / 6.0],
        [-v * v / 2.0, (3.0 * u2 - 4.0 * u) / 2.0, (-3.0 * u2 + 2.0 * u + 1.0) / 2.0, u2 / 2.0],
        [v, 3.0 * u - 2.0, -3.0 * u + 1.0, u],
    )
}

impl CubicSpline {
    pub fn intervals(&self) -> usize {
        self.coefficients.len() - 3
    }

    pub fn end(&self) -> f64 {
        self.start + self.spacing * self.intervals() as f64
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.intervals();
        let s = (t - self.start) / self.spacing;
        let i = (s.floor().max(0.0) as usize).min(n - 1);
        (i, s - i as f64)
    }

    fn inside(&self, t: f64) -> [f64; 3] {
        let (i, u) = self.locate(t);
        let (b0, b1, b2) = basis(u);
        let c = &self.coefficients[i..i + 4];
        let mut r = [0.0; 3];
        for k in 0..4 {
            r[0] += c[k] * b0[k];
            r[1] += c[k] * b1[k];
            r[2] += c[k] * b2[k];
        }
        r[1] /= self.spacing;
        r[2] /= self.spacing * self.spacing;
        r
    }

    /// Value, first and second derivative.
    pub fn eval3(&self, t: f64) -> [f64; 3] {
        let (a, b) = (self.start, self.end());
        let edge = if t < a {
            a
        } else if t > b {
            b
        } else {
            return self.inside(t);
        };
        let [f, d1, d2] = self.inside(edge);
        let d = t - edge;
        [f + d1 * d + 0.5 * d2 * d * d, d1 + d2 * d, d2]
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval3(t)[0]
    }

    /// Third derivative (piecewise constant inside, zero on the continuations).
    pub fn third(&self, t: f64) -> f64 {
        if t < self.start || t > self.end() {
            return 0.0;
        }
        let (i, _) = self.locate(t);
        let c = &self.coefficients[i..i + 4];
        (-c[0] + 3.0 * c[1] - 3.0 * c[2] + c[3]) / self.spacing.powi(3)
    }

    /// Weighted least-squares fit with a second-difference roughness penalty.
    pub fn fit(params: &[f64], values: &[f64], weights: &[f64], lo: f64, hi: f64, intervals: usize, penalty: f64) -> Option<Self> {
        Self::fit_with_slopes(params, values, weights, &[], lo, hi, intervals, penalty)
    }

    /// As [`fit`](Self::fit), with optional derivative observations
    /// `(parameter, slope, weight)` entering the same least-squares system.
    #[allow(clippy::too_many_arguments)]
    pub fn fit_with_slopes(
        params: &[f64],
        values: &[f64],
        weights: &[f64],
        slopes: &[(f64, f64, f64)],
        lo: f64,
        hi: f64,
        intervals: usize,
        penalty: f64,
    ) -> Option<Self> {
        let n = intervals.max(1);
        let nb = n + 3;
        let spacing = (hi - lo) / n as f64;
        if !(spacing > 0.0) {
            return None;
        }
        let shell = Self { start: lo, spacing, coefficients: vec![0.0; nb] };
        let mut a = DMatrix::<f64>::zeros(nb, nb);
        let mut rhs = DVector::<f64>::zeros(nb);
        let mut add = |t: f64, v: f64, w: f64, order: usize| {
            let (i, u) = shell.locate(t.clamp(lo, hi));
            let (b0, b1, _) = basis(u);
            let b = if order == 0 { b0 } else { b1.map(|x| x / spacing) };
            for p in 0..4 {
                rhs[i + p] += w * b[p] * v;
                for q in 0..4 {
                    a[(i + p, i + q)] += w * b[p] * b[q];
                }
            }
        };
        for ((&t, &v), &w) in params.iter().zip(values).zip(weights) {
            add(t, v, w, 0);
        }
        for &(t, d, w) in slopes {
            add(t, d, w, 1);
        }
        let scale = a.diagonal().max().max(1e-300);
        let pen = penalty * scale;
        for j in 0..nb - 2 {
            let d = [1.0, -2.0, 1.0];
            for p in 0..3 {
                for q in 0..3 {
                    a[(j + p, j + q)] += pen * d[p] * d[q];
                }
            }
        }
        let c = a.cholesky()?.solve(&rhs);
        Some(Self { start: lo, spacing, coefficients: c.iter().copied().collect() })
    }
}
