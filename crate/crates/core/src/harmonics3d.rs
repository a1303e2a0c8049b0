//! Complex spherical harmonics, Wigner 3j symbols in exact arithmetic, a
//! tensor-product sphere quadrature, and the triple-product identities behind
//! the three-dimensional trace formulas.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::geometry2d::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SphericalHarmonicIndex {
    pub l: i64,
    pub m: i64,
}

impl SphericalHarmonicIndex {
    pub fn new(l: i64, m: i64) -> Result<Self> {
        if l < 0 || m.abs() > l {
            return Err(Error::BadHarmonic { l, m });
        }
        Ok(Self { l, m })
    }

    /// Like [`new`](Self::new) but `None` outside the valid range, for sums that
    /// treat out-of-range harmonics as zero.
    pub fn checked(l: i64, m: i64) -> Option<Self> {
        Self::new(l, m).ok()
    }
}

/// Orthonormalized associated Legendre value `√((2l+1)/4π·(l−m)!/(l+m)!)·P_l^m(x)`
/// without the Condon–Shortley phase, for `0 ≤ m ≤ l`.
fn legendre_normalized(l: i64, m: i64, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut prev = pmm;
    let mut cur = x * (2.0 * mf + 3.0).sqrt() * pmm;
    for k in (m + 2)..=l {
        let kf = k as f64;
        let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
        let b = (((kf - 1.0).powi(2) - mf * mf) / (4.0 * (kf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (x * cur - b * prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Condon–Shortley phased, orthonormal `Y_l^m(θ, φ)` (θ polar, φ azimuth).
pub fn eval_y(idx: SphericalHarmonicIndex, theta: f64, phi: f64) -> Complex64 {
    let ma = idx.m.abs();
    let p = legendre_normalized(idx.l, ma, theta.cos());
    let phase = if ma % 2 == 0 { 1.0 } else { -1.0 };
    let y = Complex64::from_polar(phase * p, ma as f64 * phi);
    if idx.m >= 0 {
        y
    } else {
        // Y_l^{-m} = (−1)^m conj(Y_l^m)
        y.conj() * phase
    }
}

fn factorial(n: i64) -> BigInt {
    (2..=n.max(1)).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn ratio(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

/// A 3j symbol as `sum·√radicand` with both factors exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct Exact3j {
    pub sum: BigRational,
    pub radicand: BigRational,
}

impl Exact3j {
    fn zero() -> Self {
        Self { sum: BigRational::zero(), radicand: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.sum.is_zero() || self.radicand.is_zero()
    }

    /// Exact square.
    pub fn squared(&self) -> BigRational {
        &self.sum * &self.sum * &self.radicand
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mag = self.squared().to_f64().unwrap_or(f64::NAN).sqrt();
        if self.sum.is_negative() {
            -mag
        } else {
            mag
        }
    }
}

fn triangle(l1: i64, l2: i64, l3: i64) -> bool {
    l1 >= 0 && l2 >= 0 && l3 >= 0 && l3 >= (l1 - l2).abs() && l3 <= l1 + l2
}

/// Racah's closed-form sum, exact.
pub fn wigner3j_exact(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> Exact3j {
    if m1 + m2 + m3 != 0 || !triangle(l1, l2, l3) || m1.abs() > l1 || m2.abs() > l2 || m3.abs() > l3 {
        return Exact3j::zero();
    }
    let delta = ratio(factorial(l1 + l2 - l3) * factorial(l1 - l2 + l3) * factorial(-l1 + l2 + l3))
        / ratio(factorial(l1 + l2 + l3 + 1));
    let facts = factorial(l1 + m1)
        * factorial(l1 - m1)
        * factorial(l2 + m2)
        * factorial(l2 - m2)
        * factorial(l3 + m3)
        * factorial(l3 - m3);
    let kmin = 0.max(l2 - l3 - m1).max(l1 - l3 + m2);
    let kmax = (l1 + l2 - l3).min(l1 - m1).min(l2 + m2);
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(l3 - l2 + k + m1)
            * factorial(l3 - l1 + k - m2)
            * factorial(l1 + l2 - l3 - k)
            * factorial(l1 - k - m1)
            * factorial(l2 - k + m2);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if (l1 - l2 - m3).rem_euclid(2) == 1 {
        sum = -sum;
    }
    Exact3j { sum, radicand: delta * ratio(facts) }
}

pub fn wigner3j(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    wigner3j_exact(l1, l2, l3, m1, m2, m3).to_f64()
}

/// `∮ Y_{l1}^{m1} Y_{l2}^{m2} Y_{l3}^{m3}` over the unit sphere.
pub fn triple_integral(i1: SphericalHarmonicIndex, i2: SphericalHarmonicIndex, i3: SphericalHarmonicIndex) -> f64 {
    let pre = ((2 * i1.l + 1) * (2 * i2.l + 1) * (2 * i3.l + 1)) as f64 / (4.0 * PI);
    pre.sqrt() * wigner3j(i1.l, i2.l, i3.l, 0, 0, 0) * wigner3j(i1.l, i2.l, i3.l, i1.m, i2.m, i3.m)
}

/// `∮ Y_{l1}^{m1} Y_{l2}^{m2} conj(Y_{l3}^{m3})`; zero when any index is out of range.
pub fn triple_integral_conj(l1: i64, m1: i64, l2: i64, m2: i64, l3: i64, m3: i64) -> f64 {
    match (
        SphericalHarmonicIndex::checked(l1, m1),
        SphericalHarmonicIndex::checked(l2, m2),
        SphericalHarmonicIndex::checked(l3, -m3),
    ) {
        (Some(a), Some(b), Some(c)) => {
            let s = if m3.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            s * triple_integral(a, b, c)
        }
        _ => 0.0,
    }
}

/// Exact `(∮ Y_{l1}^{m1} Y_{l2}^{m2} conj(Y_{l3}^{m3}))² · 4π`.
pub fn triple_integral_conj_squared_exact(l1: i64, m1: i64, l2: i64, m2: i64, l3: i64, m3: i64) -> BigRational {
    if SphericalHarmonicIndex::checked(l1, m1).is_none()
        || SphericalHarmonicIndex::checked(l2, m2).is_none()
        || SphericalHarmonicIndex::checked(l3, m3).is_none()
    {
        return BigRational::zero();
    }
    let pre = BigInt::from((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1));
    ratio(pre) * wigner3j_exact(l1, l2, l3, 0, 0, 0).squared() * wigner3j_exact(l1, l2, l3, m1, m2, -m3).squared()
}

/// `Y_{l1}^{m1}·Y_{l2}^{m2} = Σ_L c_L Y_L^{m1+m2}`, the Gaunt expansion.
pub fn product_expansion(i1: SphericalHarmonicIndex, i2: SphericalHarmonicIndex) -> Vec<(SphericalHarmonicIndex, f64)> {
    let m = i1.m + i2.m;
    let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    ((i1.l - i2.l).abs()..=(i1.l + i2.l))
        .filter(|&big_l| m.abs() <= big_l)
        .map(|big_l| {
            let pre = (((2 * i1.l + 1) * (2 * i2.l + 1) * (2 * big_l + 1)) as f64 / (4.0 * PI)).sqrt();
            let c = sign
                * pre
                * wigner3j(i1.l, i2.l, big_l, 0, 0, 0)
                * wigner3j(i1.l, i2.l, big_l, i1.m, i2.m, -m);
            (SphericalHarmonicIndex { l: big_l, m }, c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

impl SphereNode {
    pub fn unit(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Gauss–Legendre in `cos θ` times the uniform rule in φ; exact for harmonics of
/// total degree below `min(2·n_theta, n_phi)`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    nodes: Vec<SphereNode>,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for (x, w) in gauss_legendre(n_theta, -1.0, 1.0) {
            let theta = x.acos();
            for j in 0..n_phi {
                nodes.push(SphereNode { theta, phi: j as f64 * dphi, weight: w * dphi });
            }
        }
        Self { nodes }
    }

    /// Rule exact for products of harmonics of total degree ≤ `degree`.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 2, degree + 2)
    }

    pub fn nodes(&self) -> &[SphereNode] {
        &self.nodes
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> Complex64) -> Complex64 {
        self.nodes.iter().map(|n| f(n.theta, n.phi) * n.weight).sum()
    }
}

/// One identity compared against an independent evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn error(&self) -> f64 {
        (self.expected - self.computed).abs()
    }

    pub fn passed(&self) -> bool {
        self.error() <= self.tolerance
    }
}

/// The closed forms for integrals of `Y_l^m Y_1^p conj(Y_{l'}^{m+p})`, each
/// checked against sphere quadrature for `l ≤ lmax` and every admissible `m`.
pub fn three_harmonic_closed_forms(lmax: i64, tolerance: f64) -> Vec<IdentityCheck> {
    let sq = SphereQuadrature::for_degree(2 * lmax as usize + 4);
    let quad = |l1: i64, m1: i64, l2: i64, m2: i64, l3: i64, m3: i64| -> f64 {
        let (Some(a), Some(b), Some(c)) = (
            SphericalHarmonicIndex::checked(l1, m1),
            SphericalHarmonicIndex::checked(l2, m2),
            SphericalHarmonicIndex::checked(l3, m3),
        ) else {
            return 0.0;
        };
        sq.integrate(|t, p| eval_y(a, t, p) * eval_y(b, t, p) * eval_y(c, t, p).conj()).re
    };
    let s38 = (3.0 / (8.0 * PI)).sqrt();
    let s34 = (3.0 / (4.0 * PI)).sqrt();
    let mut out = Vec::new();
    for l in 0..=lmax {
        let lf = l as f64;
        for m in -l..=l {
            let mf = m as f64;
            out.push(IdentityCheck {
                name: format!("Y[{l},{m}] Y[0,0] conj Y[{l},{m}]"),
                expected: (1.0 / (4.0 * PI)).sqrt(),
                computed: quad(l, m, 0, 0, l, m),
                tolerance,
            });
            if l >= 1 {
                out.push(IdentityCheck {
                    name: format!("Y[{l},{m}] Y[1,1] conj Y[{},{}]", l - 1, m + 1),
                    expected: -s38 * ((lf - mf) * (lf - mf - 1.0) / ((2.0 * lf + 1.0) * (2.0 * lf - 1.0))).sqrt(),
                    computed: quad(l, m, 1, 1, l - 1, m + 1),
                    tolerance,
                });
            }
        }
        for m in (-l - 1)..=(l + 1) {
            let mf = m as f64;
            out.push(IdentityCheck {
                name: format!("Y[{l},{m}] Y[1,0] conj Y[{},{m}]", l + 1),
                expected: s34 * ((lf + mf + 1.0) * (lf - mf + 1.0) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt(),
                computed: quad(l, m, 1, 0, l + 1, m),
                tolerance,
            });
        }
        for m in (-l - 2)..=l {
            let mf = m as f64;
            out.push(IdentityCheck {
                name: format!("Y[{l},{m}] Y[1,1] conj Y[{},{}]", l + 1, m + 1),
                expected: s38 * ((lf + mf + 1.0) * (lf + mf + 2.0) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt(),
                computed: quad(l, m, 1, 1, l + 1, m + 1),
                tolerance,
            });
        }
    }
    out
}

/// `Σ_{m,p} (∮ conj(Y_{l+shift}^{m+p}) Y_l^m Y_1^p)²` with `shift = ±1`, as an exact
/// multiple of `3/4π`.
pub fn coupling_sum_exact(l: i64, shift: i64) -> BigRational {
    let mut acc = BigRational::zero();
    for m in -l..=l {
        for p in -1..=1 {
            acc += triple_integral_conj_squared_exact(l, m, 1, p, l + shift, m + p);
        }
    }
    acc / ratio(BigInt::from(3))
}

/// Closed form of the coupling sum in units of `3/4π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingForm {
    /// `l` for `shift = −1`, `l+1` for `+1`: the sum over all `m` and `p`.
    #[default]
    Derived,
    /// `l/(2l+1)` and `(l+1)/(2l+1)`, which is the average over `m` rather than the sum.
    Printed,
}

pub fn coupling_sum_closed(l: i64, shift: i64, form: CouplingForm) -> BigRational {
    let num = BigInt::from(if shift < 0 { l } else { l + 1 });
    match form {
        CouplingForm::Derived => BigRational::from_integer(num),
        CouplingForm::Printed => BigRational::new(num, BigInt::from(2 * l + 1)),
    }
}

/// Floating evaluation of the same sum via [`triple_integral_conj`].
pub fn coupling_sum(l: i64, shift: i64) -> f64 {
    let mut acc = 0.0;
    for m in -l..=l {
        for p in -1..=1 {
            acc += triple_integral_conj(l, m, 1, p, l + shift, m + p).powi(2);
        }
    }
    acc
}

/// `Σ_{m1,m2} (2l3+1)·3j(l1 l2 l3; m1 m2 m3)²` for fixed `m3`, exact.
pub fn orthogonality_sum(l1: i64, l2: i64, l3: i64, m3: i64) -> BigRational {
    let mut acc = BigRational::zero();
    for m1 in -l1..=l1 {
        let m2 = -m1 - m3;
        if m2.abs() <= l2 {
            acc += wigner3j_exact(l1, l2, l3, m1, m2, m3).squared();
        }
    }
    acc * ratio(BigInt::from(2 * l3 + 1))
}

/// Which sign the `r^{l+1}` coefficient of the 3D auxiliary solution carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientForm {
    /// `(1−l)/l`, the solution of the mode-by-mode boundary equation.
    #[default]
    Derived,
    /// `(l−1)/l`.
    Printed,
}

/// Coefficients of `ũ = a_{l−1} r^{l−1} Y_{l−1}^{m+p} + a_{l+1} r^{l+1} Y_{l+1}^{m+p}`
/// on the unit sphere for `V = r^l Y_l^m`, `u = r Y_1^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingCoefficients {
    pub a_minus: f64,
    pub a_plus: f64,
    pub c_minus: f64,
    pub c_plus: f64,
}

fn coupling_c(l: i64, m: i64, p: i64, big_l: i64) -> f64 {
    let sign = if (m + p).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let pre = (3.0 * (2 * big_l + 1) as f64 * (2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    sign * pre * wigner3j(l, 1, big_l, m, p, -m - p) * wigner3j(l, 1, big_l, 0, 0, 0)
}

fn check_d2_args(l: i64, m: i64, p: i64) -> Result<()> {
    if l == 0 || l == 2 {
        return Err(Error::ExcludedMode(l));
    }
    SphericalHarmonicIndex::new(l, m)?;
    SphericalHarmonicIndex::new(1, p)?;
    Ok(())
}

/// Multipliers `a_{l∓1}/C_{l∓1}`.
fn d2_factors(l: f64, alpha: f64, form: CoefficientForm) -> (f64, f64) {
    let minus = (l + 2.0) / (l - 2.0) * (1.0 + alpha * (3.0 - l)) / (1.0 + alpha * (1.0 + l));
    let plus = (l - 1.0) / l * (1.0 + alpha * (4.0 + l)) / (1.0 + alpha * (3.0 + l));
    match form {
        CoefficientForm::Derived => (minus, -plus),
        CoefficientForm::Printed => (minus, plus),
    }
}

pub fn coupling_coefficients(l: i64, m: i64, p: i64, alpha: f64, form: CoefficientForm) -> Result<CouplingCoefficients> {
    check_d2_args(l, m, p)?;
    let c_minus = if l >= 1 { coupling_c(l, m, p, l - 1) } else { 0.0 };
    let c_plus = coupling_c(l, m, p, l + 1);
    let (fm, fp) = d2_factors(l as f64, alpha, form);
    Ok(CouplingCoefficients { a_minus: fm * c_minus, a_plus: fp * c_plus, c_minus, c_plus })
}

/// Residuals of the two mode equations on the unit sphere, divided by the
/// (nonzero) coupling coefficients, in exact arithmetic:
/// `a_L/C_L·[αL(L+1) + L − (2α+1)] − rhs_L/C_L` for `L = l∓1`.
pub fn coupling_residual(l: i64, alpha: &BigRational, form: CoefficientForm) -> Result<(BigRational, BigRational)> {
    if l == 0 || l == 2 {
        return Err(Error::ExcludedMode(l));
    }
    let q = |n: i64| BigRational::from_integer(BigInt::from(n));
    let one = BigRational::one();
    let lhs = |big_l: i64| alpha * q(big_l * (big_l + 1)) + q(big_l) - (alpha * q(2) + &one);
    let rhs_minus = q(l + 2) * (&one + alpha * q(3 - l));
    let rhs_plus = q(1 - l) * (&one + alpha * q(4 + l));
    let fm = q(l + 2) / q(l - 2) * (&one + alpha * q(3 - l)) / (&one + alpha * q(1 + l));
    let mut fp = q(l - 1) / q(l) * (&one + alpha * q(4 + l)) / (&one + alpha * q(3 + l));
    if form == CoefficientForm::Derived {
        fp = -fp;
    }
    Ok((fm * lhs(l - 1) - rhs_minus, fp * lhs(l + 1) - rhs_plus))
}

/// Bracket `−a_{l−1}(4α+2l)∮conj(Y_{l−1}^{m+p})Y_l^mY_1^p − a_{l+1}(4α+2)∮conj(Y_{l+1}^{m+p})Y_l^mY_1^p`,
/// once from 3j symbols and once by sphere quadrature.
pub fn coupling_bracket(l: i64, m: i64, p: i64, alpha: f64, form: CoefficientForm) -> Result<(f64, f64)> {
    let c = coupling_coefficients(l, m, p, alpha, form)?;
    let lf = l as f64;
    let exact = -c.a_minus * (4.0 * alpha + 2.0 * lf) * triple_integral_conj(l, m, 1, p, l - 1, m + p)
        - c.a_plus * (4.0 * alpha + 2.0) * triple_integral_conj(l, m, 1, p, l + 1, m + p);
    let sq = SphereQuadrature::for_degree(2 * l as usize + 4);
    let (yl, y1) = (SphericalHarmonicIndex::new(l, m)?, SphericalHarmonicIndex::new(1, p)?);
    let integral = |big_l: i64| -> f64 {
        match SphericalHarmonicIndex::checked(big_l, m + p) {
            Some(yb) => sq.integrate(|t, f| eval_y(yb, t, f).conj() * eval_y(yl, t, f) * eval_y(y1, t, f)).re,
            None => 0.0,
        }
    };
    let quad = -c.a_minus * (4.0 * alpha + 2.0 * lf) * integral(l - 1) - c.a_plus * (4.0 * alpha + 2.0) * integral(l + 1);
    Ok((exact, quad))
}

/// Every identity of the module, for the `harmonics-check` command.
pub fn identity_suite() -> Vec<IdentityCheck> {
    let mut out = Vec::new();
    let sq = SphereQuadrature::for_degree(24);
    for l in 0..=10 {
        for m in -l..=l {
            let i = SphericalHarmonicIndex { l, m };
            let norm = sq.integrate(|t, p| Complex64::new(eval_y(i, t, p).norm_sqr(), 0.0)).re;
            out.push(IdentityCheck { name: format!("norm Y[{l},{m}]"), expected: 1.0, computed: norm, tolerance: 1e-12 });
        }
    }
    out.extend(three_harmonic_closed_forms(8, 1e-10));
    for l in 1..=10 {
        for shift in [-1, 1] {
            let closed = coupling_sum_closed(l, shift, CouplingForm::Derived);
            let exact = coupling_sum_exact(l, shift);
            let scale = 3.0 / (4.0 * PI);
            out.push(IdentityCheck {
                name: format!("coupling sum l={l} shift={shift:+} (exact)"),
                expected: 0.0,
                computed: if exact == closed { 0.0 } else { 1.0 },
                tolerance: 0.0,
            });
            out.push(IdentityCheck {
                name: format!("coupling sum l={l} shift={shift:+}"),
                expected: scale * closed.to_f64().unwrap(),
                computed: coupling_sum(l, shift),
                tolerance: 1e-12,
            });
        }
    }
    for l1 in 0..=10 {
        for l2 in 0..=(10 - l1).min(l1) {
            for l3 in (l1 - l2)..=(l1 + l2).min(10) {
                let s = orthogonality_sum(l1, l2, l3, 0);
                out.push(IdentityCheck {
                    name: format!("3j orthogonality ({l1},{l2},{l3})"),
                    expected: 0.0,
                    computed: if s.is_one() { 0.0 } else { 1.0 },
                    tolerance: 0.0,
                });
            }
        }
    }
    for l in [1, 3, 4, 5, 6] {
        for alpha in [BigRational::zero(), BigRational::one(), BigRational::new(7.into(), 3.into())] {
            let (r1, r2) = coupling_residual(l, &alpha, CoefficientForm::Derived).unwrap();
            out.push(IdentityCheck {
                name: format!("auxiliary 3D mode equations l={l} alpha={alpha}"),
                expected: 0.0,
                computed: if r1.is_zero() && r2.is_zero() { 0.0 } else { 1.0 },
                tolerance: 0.0,
            });
        }
    }
    out
}
