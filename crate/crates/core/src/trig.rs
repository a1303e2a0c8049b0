//! Fourier-series algebra on the circle and harmonic functions in the disk,
//! used to evaluate boundary equations and integrals on `∂B_R` exactly.

use std::f64::consts::PI;

use crate::geometry2d::TrigSeries;

impl TrigSeries {
    /// Pointwise product, via `cos a cos b = ½[cos(a−b) + cos(a+b)]` and friends.
    pub fn mul(&self, other: &TrigSeries) -> TrigSeries {
        let (n, m) = (self.degree(), other.degree());
        let mut out = TrigSeries::default();
        let mut acc = |k: i64, c: f64, s: f64| {
            // k may be negative: cos(−kθ) = cos kθ, sin(−kθ) = −sin kθ
            let (k, s) = if k < 0 { (-k, -s) } else { (k, s) };
            let (c0, s0) = out.coeff(k as usize);
            if k == 0 {
                out.a0 = c0 + c;
            } else {
                out.set_mode(k as usize, c0 + c, s0 + s);
            }
        };
        for i in 0..=n {
            let (ac, as_) = self.coeff(i);
            let as_ = if i == 0 { 0.0 } else { as_ };
            for j in 0..=m {
                let (bc, bs) = other.coeff(j);
                let bs = if j == 0 { 0.0 } else { bs };
                let (i, j) = (i as i64, j as i64);
                // (ac cos iθ + as sin iθ)(bc cos jθ + bs sin jθ)
                acc(i - j, 0.5 * (ac * bc + as_ * bs), 0.5 * (as_ * bc - ac * bs));
                acc(i + j, 0.5 * (ac * bc - as_ * bs), 0.5 * (as_ * bc + ac * bs));
            }
        }
        out
    }

    /// `d/dθ`.
    pub fn derivative(&self) -> TrigSeries {
        let mut out = TrigSeries::default();
        for k in 1..=self.degree() {
            let (c, s) = self.coeff(k);
            let kf = k as f64;
            out.set_mode(k, kf * s, -kf * c);
        }
        out
    }

    /// `∫_0^{2π} f dθ`.
    pub fn integral(&self) -> f64 {
        2.0 * PI * self.a0
    }

    /// Largest coefficient magnitude.
    pub fn max_abs_coeff(&self) -> f64 {
        self.cos.iter().chain(&self.sin).fold(self.a0.abs(), |m, v| m.max(v.abs()))
    }

    /// Multiply mode `k` by `g(k)`.
    pub fn map_modes(&self, g: impl Fn(usize) -> f64) -> TrigSeries {
        let mut out = TrigSeries::constant(g(0) * self.a0);
        for k in 1..=self.degree() {
            let (c, s) = self.coeff(k);
            let w = g(k);
            out.set_mode(k, w * c, w * s);
        }
        out
    }
}

/// Harmonic function `a0 + Σ r^n (c_n cos nθ + s_n sin nθ)` in the plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolidHarmonic2D {
    pub coeffs: TrigSeries,
}

impl SolidHarmonic2D {
    pub fn new(coeffs: TrigSeries) -> Self {
        Self { coeffs }
    }

    /// Values on the circle of radius `r`.
    pub fn trace(&self, r: f64) -> TrigSeries {
        self.coeffs.map_modes(|n| r.powi(n as i32))
    }

    /// Outward normal derivative on the circle of radius `r`.
    pub fn normal_derivative(&self, r: f64) -> TrigSeries {
        self.coeffs.map_modes(|n| n as f64 * r.powi(n as i32 - 1))
    }

    /// Arc-length derivative on the circle of radius `r`.
    pub fn tangential_derivative(&self, r: f64) -> TrigSeries {
        self.trace(r).derivative().scaled(1.0 / r)
    }
}

/// `Δ_τ g` on the circle of radius `r`.
pub fn laplace_beltrami(g: &TrigSeries, r: f64) -> TrigSeries {
    g.map_modes(|k| -((k * k) as f64) / (r * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample() -> (TrigSeries, TrigSeries) {
        let mut a = TrigSeries::constant(0.3);
        a.set_mode(1, 1.0, -0.5);
        a.set_mode(3, 0.2, 0.7);
        let mut b = TrigSeries::constant(-1.1);
        b.set_mode(2, 0.4, 0.9);
        b.set_mode(3, -0.6, 0.1);
        (a, b)
    }

    #[test]
    fn product_matches_pointwise() {
        let (a, b) = sample();
        let p = a.mul(&b);
        for k in 0..17 {
            let t = 0.37 * k as f64;
            assert_relative_eq!(p.eval(t).0, a.eval(t).0 * b.eval(t).0, epsilon = 1e-13);
        }
        assert_eq!(p.degree(), 6);
    }

    #[test]
    fn derivative_and_integral() {
        let (a, _) = sample();
        let d = a.derivative();
        for k in 0..11 {
            let t = 0.51 * k as f64;
            assert_relative_eq!(d.eval(t).0, a.eval(t).1, epsilon = 1e-13);
        }
        assert_relative_eq!(a.mul(&a).integral(), a.l2_squared(), epsilon = 1e-13);
    }

    #[test]
    fn harmonic_traces() {
        let u = SolidHarmonic2D::new(TrigSeries::mode(3, 2.0, 0.0));
        let r = 1.5;
        assert_relative_eq!(u.trace(r).coeff(3).0, 2.0 * r.powi(3), epsilon = 1e-14);
        assert_relative_eq!(u.normal_derivative(r).coeff(3).0, 6.0 * r * r, epsilon = 1e-14);
        // ∂_τ of r³cos3θ at radius r is −3r² sin 3θ
        assert_relative_eq!(u.tangential_derivative(r).coeff(3).1, -6.0 * r * r, epsilon = 1e-14);
        assert_relative_eq!(laplace_beltrami(&u.trace(r), r).coeff(3).0, -9.0 * 2.0 * r, epsilon = 1e-13);
    }
}
