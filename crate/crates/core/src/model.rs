//! The Barbanis family of two-dimensional Hamiltonians,
//! `H = p²/2m + ½mω_x²x² + ½mω_y²y² + λx²y`.

use crate::error::{Error, Result};
use crate::geom::{PhasePoint, Point};
use serde::{Deserialize, Serialize};

/// Radius beyond which [`HamiltonianModel::equipotential_point`] gives up.
pub const DEFAULT_RAY_LENGTH: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianModel {
    pub omega_x: f64,
    pub omega_y: f64,
    pub lambda: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl HamiltonianModel {
    pub fn new(omega_x: f64, omega_y: f64, lambda: f64) -> Result<Self> {
        let model = Self { omega_x, omega_y, lambda, mass: 1.0, hbar: 1.0 };
        model.validate()?;
        Ok(model)
    }

    /// Parameters used for the trajectory family and spectrum of the coupled system.
    pub fn barbanis() -> Self {
        Self { omega_x: 1.1, omega_y: 1.0, lambda: -0.11, mass: 1.0, hbar: 1.0 }
    }

    /// Same frequencies as [`barbanis`](Self::barbanis) with the coupling switched off.
    pub fn uncoupled() -> Self {
        Self { lambda: 0.0, ..Self::barbanis() }
    }

    pub fn with_hbar(self, hbar: f64) -> Self {
        Self { hbar, ..self }
    }

    pub fn with_mass(self, mass: f64) -> Self {
        Self { mass, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_x", self.omega_x),
            ("omega_y", self.omega_y),
            ("mass", self.mass),
            ("hbar", self.hbar),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidModel("lambda must be finite".into()));
        }
        Ok(())
    }

    pub fn is_separable(&self) -> bool {
        self.lambda == 0.0
    }

    pub fn potential(&self, q: Point) -> f64 {
        let (x, y) = (q.x, q.y);
        0.5 * self.mass * (self.omega_x * self.omega_x * x * x + self.omega_y * self.omega_y * y * y)
            + self.lambda * x * x * y
    }

    pub fn gradient(&self, q: Point) -> Point {
        let (x, y) = (q.x, q.y);
        Point::new(
            self.mass * self.omega_x * self.omega_x * x + 2.0 * self.lambda * x * y,
            self.mass * self.omega_y * self.omega_y * y + self.lambda * x * x,
        )
    }

    pub fn hessian(&self, q: Point) -> [[f64; 2]; 2] {
        let off = 2.0 * self.lambda * q.x;
        [
            [self.mass * self.omega_x * self.omega_x + 2.0 * self.lambda * q.y, off],
            [off, self.mass * self.omega_y * self.omega_y],
        ]
    }

    pub fn energy(&self, s: &PhasePoint) -> f64 {
        s.p.dot(s.p) / (2.0 * self.mass) + self.potential(s.q)
    }

    /// Exact level `ħω_x(m+½) + ħω_y(n+½)` of the uncoupled oscillators.
    pub fn separable_spectrum(&self, m: usize, n: usize) -> Result<f64> {
        if !self.is_separable() {
            return Err(Error::NotSeparable(self.lambda));
        }
        Ok(self.hbar * self.omega_x * (m as f64 + 0.5) + self.hbar * self.omega_y * (n as f64 + 0.5))
    }

    /// Turning-point amplitudes `(a, b)` of the uncoupled oscillators carrying
    /// `m` and `n` quanta.
    pub fn separable_amplitudes(&self, m: usize, n: usize) -> (f64, f64) {
        let ex = self.hbar * self.omega_x * (m as f64 + 0.5);
        let ey = self.hbar * self.omega_y * (n as f64 + 0.5);
        (
            (2.0 * ex / self.mass).sqrt() / self.omega_x,
            (2.0 * ey / self.mass).sqrt() / self.omega_y,
        )
    }

    /// First point on the ray from the origin along `direction` where `U = energy`.
    pub fn equipotential_point(&self, energy: f64, direction: Point) -> Result<Point> {
        self.equipotential_point_within(energy, direction, DEFAULT_RAY_LENGTH)
    }

    pub fn equipotential_point_within(&self, energy: f64, direction: Point, ray_length: f64) -> Result<Point> {
        if !(energy > 0.0) {
            return Err(Error::InvalidArgument(format!("energy must be positive, got {energy}")));
        }
        let len = direction.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidArgument("direction must be nonzero".into()));
        }
        let d = direction * (1.0 / len);
        let f = |r: f64| self.potential(d * r) - energy;

        // U grows like r² near the origin; march outward to bracket the first crossing.
        let mut lo = 0.0;
        let mut hi = None;
        let step = ray_length / 4096.0;
        let mut r = step;
        while r <= ray_length {
            if f(r) >= 0.0 {
                hi = Some(r);
                break;
            }
            lo = r;
            r += step;
        }
        let Some(mut hi) = hi else {
            return Err(Error::UnboundedDirection { dx: d.x, dy: d.y, radius: ray_length });
        };
        while hi - lo > 1e-15 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (plo, phi) = (d * lo, d * hi);
        Ok(if f(lo).abs() <= f(hi).abs() { plo } else { phi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_gradient(m: &HamiltonianModel, q: Point, h: f64) -> Point {
        let dx = Point::new(h, 0.0);
        let dy = Point::new(0.0, h);
        Point::new(
            (m.potential(q + dx) - m.potential(q - dx)) / (2.0 * h),
            (m.potential(q + dy) - m.potential(q - dy)) / (2.0 * h),
        )
    }

    #[test]
    fn potential_values() {
        let m = HamiltonianModel::barbanis();
        assert_eq!(m.potential(Point::new(0.0, 0.0)), 0.0);
        assert_relative_eq!(HamiltonianModel::uncoupled().potential(Point::new(1.0, 0.0)), 0.605, epsilon = 1e-15);
        assert_relative_eq!(m.potential(Point::new(1.0, 1.0)), 0.995, epsilon = 1e-15);
    }

    #[test]
    fn gradient_and_hessian_values() {
        let m0 = HamiltonianModel::uncoupled();
        assert_eq!(m0.gradient(Point::new(0.0, 0.0)), Point::new(0.0, 0.0));
        let g = m0.gradient(Point::new(1.0, 0.0));
        assert_relative_eq!(g.x, 1.21, epsilon = 1e-14);
        assert_eq!(g.y, 0.0);
        let h0 = m0.hessian(Point::new(3.0, -2.0));
        assert_relative_eq!(h0[0][0], 1.21, epsilon = 1e-14);
        assert_eq!([h0[0][1], h0[1][0], h0[1][1]], [0.0, 0.0, 1.0]);

        let h = HamiltonianModel::barbanis().hessian(Point::new(1.0, 1.0));
        assert_relative_eq!(h[0][0], 1.21 - 0.22, epsilon = 1e-14);
        assert_relative_eq!(h[0][1], -0.22, epsilon = 1e-14);
        assert_eq!(h[0][1], h[1][0]);
        assert_relative_eq!(h[1][1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn separable_spectrum_values() {
        let m = HamiltonianModel::uncoupled();
        assert_relative_eq!(m.separable_spectrum(0, 0).unwrap(), 1.05, epsilon = 1e-14);
        assert_relative_eq!(m.separable_spectrum(2, 2).unwrap(), 5.25, epsilon = 1e-14);
        let unit = HamiltonianModel::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(unit.separable_spectrum(0, 0).unwrap(), 1.0);
        assert!(matches!(HamiltonianModel::barbanis().separable_spectrum(0, 0), Err(Error::NotSeparable(_))));
    }

    #[test]
    fn equipotential_points() {
        let m = HamiltonianModel::uncoupled();
        let a = 1.7;
        let e = 0.5 * 1.21 * a * a;
        let p = m.equipotential_point(e, Point::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(p.x, a, epsilon = 1e-12);
        assert_eq!(p.y, 0.0);
        let p = m.equipotential_point(0.5, Point::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(p.y, 1.0, epsilon = 1e-12);

        let b = HamiltonianModel::barbanis();
        for k in 0..16 {
            let th = k as f64 * std::f64::consts::PI / 8.0 + 0.1;
            let q = b.equipotential_point(5.18266, Point::new(th.cos(), th.sin())).unwrap();
            assert!((b.potential(q) - 5.18266).abs() <= 1e-12 * 5.18266);
        }
    }

    #[test]
    fn equipotential_rejects_bad_input_and_escape() {
        let b = HamiltonianModel::barbanis();
        assert!(b.equipotential_point(-1.0, Point::new(1.0, 0.0)).is_err());
        assert!(b.equipotential_point(1.0, Point::new(0.0, 0.0)).is_err());
        // Along x = y the barrier along the ray peaks near U = 16.5.
        let err = b.equipotential_point_within(40.0, Point::new(1.0, 1.0), 50.0);
        assert!(matches!(err, Err(Error::UnboundedDirection { .. })));
        let err = b.equipotential_point_within(10.0, Point::new(1.0, 0.0), 1.0);
        assert!(matches!(err, Err(Error::UnboundedDirection { .. })));
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(HamiltonianModel::new(0.0, 1.0, 0.0).is_err());
        assert!(HamiltonianModel::new(1.0, -1.0, 0.0).is_err());
        assert!(HamiltonianModel::uncoupled().with_hbar(0.0).validate().is_err());
        assert!(HamiltonianModel::uncoupled().with_mass(f64::NAN).validate().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // deterministic pseudo-random sample of 100 points
        let m = HamiltonianModel::barbanis();
        let mut s = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        let h = 1e-5;
        for _ in 0..100 {
            let q = Point::new(next(), next());
            let g = m.gradient(q);
            let fd = fd_gradient(&m, q, h);
            assert!((g - fd).norm() <= 1e-6 * g.norm().max(1.0));
            let hs = m.hessian(q);
            let gx = (m.gradient(q + Point::new(h, 0.0)) - m.gradient(q - Point::new(h, 0.0))) * (0.5 / h);
            let gy = (m.gradient(q + Point::new(0.0, h)) - m.gradient(q - Point::new(0.0, h))) * (0.5 / h);
            let scale = hs[0][0].abs().max(1.0);
            assert!((hs[0][0] - gx.x).abs() <= 1e-6 * scale);
            assert!((hs[1][0] - gx.y).abs() <= 1e-6 * scale);
            assert!((hs[0][1] - gy.x).abs() <= 1e-6 * scale);
            assert!((hs[1][1] - gy.y).abs() <= 1e-6 * scale);
        }
    }

    proptest::proptest! {
        #[test]
        fn separable_spectrum_is_increasing(m in 0usize..50, n in 0usize..50) {
            let model = HamiltonianModel::uncoupled();
            let e = model.separable_spectrum(m, n).unwrap();
            proptest::prop_assert!(model.separable_spectrum(m + 1, n).unwrap() > e);
            proptest::prop_assert!(model.separable_spectrum(m, n + 1).unwrap() > e);
        }
    }
}
