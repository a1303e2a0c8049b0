//! Closed planar boundary curves, their discretization, and the geometric
//! quantities (area, perimeter, centroid, moments, P-matrix, symmetric
//! difference with the equal-area disk) used by the bounds and derivatives.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Truncated trigonometric series `a0 + Σ_k cos[k-1]·cos kθ + sin[k-1]·sin kθ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigSeries {
    pub a0: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn constant(a0: f64) -> Self {
        Self { a0, cos: Vec::new(), sin: Vec::new() }
    }

    /// Single mode `c cos kθ + s sin kθ` (k ≥ 1).
    pub fn mode(k: usize, c: f64, s: f64) -> Self {
        let mut out = Self::default();
        out.set_mode(k, c, s);
        out
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn coeff(&self, k: usize) -> (f64, f64) {
        if k == 0 {
            return (self.a0, 0.0);
        }
        let c = self.cos.get(k - 1).copied().unwrap_or(0.0);
        let s = self.sin.get(k - 1).copied().unwrap_or(0.0);
        (c, s)
    }

    pub fn set_mode(&mut self, k: usize, c: f64, s: f64) {
        if k == 0 {
            self.a0 = c;
            return;
        }
        if self.cos.len() < k {
            self.cos.resize(k, 0.0);
        }
        if self.sin.len() < k {
            self.sin.resize(k, 0.0);
        }
        self.cos[k - 1] = c;
        self.sin[k - 1] = s;
    }

    pub fn add(&self, other: &TrigSeries, weight: f64) -> TrigSeries {
        let mut out = self.clone();
        out.a0 += weight * other.a0;
        for k in 1..=other.degree() {
            let (c0, s0) = out.coeff(k);
            let (c1, s1) = other.coeff(k);
            out.set_mode(k, c0 + weight * c1, s0 + weight * s1);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> TrigSeries {
        TrigSeries {
            a0: s * self.a0,
            cos: self.cos.iter().map(|c| s * c).collect(),
            sin: self.sin.iter().map(|c| s * c).collect(),
        }
    }

    /// Value and first two derivatives at θ.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let (mut f, mut df, mut ddf) = (self.a0, 0.0, 0.0);
        for k in 1..=self.degree() {
            let (c, s) = self.coeff(k);
            let kf = k as f64;
            let (sn, cs) = (kf * theta).sin_cos();
            f += c * cs + s * sn;
            df += kf * (s * cs - c * sn);
            ddf -= kf * kf * (c * cs + s * sn);
        }
        (f, df, ddf)
    }

    /// `∫_0^{2π} f² dθ` (Parseval).
    pub fn l2_squared(&self) -> f64 {
        let mut acc = 2.0 * PI * self.a0 * self.a0;
        for k in 1..=self.degree() {
            let (c, s) = self.coeff(k);
            acc += PI * (c * c + s * s);
        }
        acc
    }
}

/// Shape of a curve in its own frame, before scaling, rotation and shift.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `ρ(θ)` about the origin.
    Polar { rho: TrigSeries },
    /// `(a cos θ, b sin θ)`.
    Ellipse { a: f64, b: f64 },
    /// Ellipse in polar form `ρ(θ) = ab/√(b²cos²θ + a²sin²θ)` plus a radial bump.
    EllipsePolar { a: f64, b: f64, bump: TrigSeries },
    /// Unit-area stadium of width `eps`: a rectangle capped by two half-disks of radius `eps/2`.
    Stadium { eps: f64 },
    /// `(x(θ), y(θ))`.
    Fourier { x: TrigSeries, y: TrigSeries },
}

/// Position and derivatives with respect to the curve parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub p: [f64; 2],
    pub dp: [f64; 2],
    pub ddp: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub shape: Shape,
    pub scale: f64,
    pub rotation: f64,
    pub shift: [f64; 2],
}

fn polar_point(rho: (f64, f64, f64), theta: f64) -> CurvePoint {
    let (r, dr, ddr) = rho;
    let (s, c) = theta.sin_cos();
    CurvePoint {
        p: [r * c, r * s],
        dp: [dr * c - r * s, dr * s + r * c],
        ddp: [ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s],
    }
}

fn ellipse_radius(a: f64, b: f64, theta: f64) -> (f64, f64, f64) {
    let (s2, c2) = (2.0 * theta).sin_cos();
    let d = b * b - a * a;
    let q = 0.5 * (a * a + b * b) + 0.5 * d * c2;
    let dq = -d * s2;
    let ddq = -2.0 * d * c2;
    let ab = a * b;
    let r = ab / q.sqrt();
    let dr = -0.5 * ab * q.powf(-1.5) * dq;
    let ddr = ab * (0.75 * q.powf(-2.5) * dq * dq - 0.5 * q.powf(-1.5) * ddq);
    (r, dr, ddr)
}

/// Piece lengths of the unit-area stadium: bottom segment, right arc, top segment, left arc.
fn stadium_pieces(eps: f64) -> [f64; 4] {
    let r = 0.5 * eps;
    let len = (1.0 - PI * eps * eps / 4.0) / eps;
    [len, PI * r, len, PI * r]
}

fn stadium_point(eps: f64, t: f64) -> CurvePoint {
    let r = 0.5 * eps;
    let len = (1.0 - PI * eps * eps / 4.0) / eps;
    let pieces = stadium_pieces(eps);
    let perim: f64 = pieces.iter().sum();
    // arc length per unit parameter
    let j = perim / (2.0 * PI);
    let mut s = (t.rem_euclid(2.0 * PI)) * j;
    let h = 0.5 * len;
    if s < pieces[0] {
        return CurvePoint { p: [-h + s, -r], dp: [j, 0.0], ddp: [0.0, 0.0] };
    }
    s -= pieces[0];
    if s < pieces[1] {
        let a = -0.5 * PI + s / r;
        let (sn, cs) = a.sin_cos();
        let w = j / r;
        return CurvePoint {
            p: [h + r * cs, r * sn],
            dp: [-r * sn * w, r * cs * w],
            ddp: [-r * cs * w * w, -r * sn * w * w],
        };
    }
    s -= pieces[1];
    if s < pieces[2] {
        return CurvePoint { p: [h - s, r], dp: [-j, 0.0], ddp: [0.0, 0.0] };
    }
    s -= pieces[2];
    let a = 0.5 * PI + s / r;
    let (sn, cs) = a.sin_cos();
    let w = j / r;
    CurvePoint {
        p: [-h + r * cs, r * sn],
        dp: [-r * sn * w, r * cs * w],
        ddp: [-r * cs * w * w, -r * sn * w * w],
    }
}

impl BoundaryCurve {
    pub fn new(shape: Shape) -> Self {
        Self { shape, scale: 1.0, rotation: 0.0, shift: [0.0, 0.0] }
    }

    pub fn circle(radius: f64) -> Self {
        Self::new(Shape::Polar { rho: TrigSeries::constant(radius) })
    }

    pub fn polar(rho: TrigSeries) -> Self {
        Self::new(Shape::Polar { rho })
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::new(Shape::Ellipse { a, b })
    }

    pub fn stadium(eps: f64) -> Self {
        Self::new(Shape::Stadium { eps })
    }

    pub fn fourier(x: TrigSeries, y: TrigSeries) -> Self {
        Self::new(Shape::Fourier { x, y })
    }

    /// Star domain `ρ(θ) = a(2 + cos kθ)`.
    pub fn star(k: usize, a: f64) -> Self {
        let mut rho = TrigSeries::constant(2.0 * a);
        rho.set_mode(k, a, 0.0);
        Self::polar(rho)
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.scale *= s;
        self.shift = [self.shift[0] * s, self.shift[1] * s];
        self
    }

    pub fn rotated(mut self, angle: f64) -> Self {
        let (sn, cs) = angle.sin_cos();
        self.rotation += angle;
        self.shift = [cs * self.shift[0] - sn * self.shift[1], sn * self.shift[0] + cs * self.shift[1]];
        self
    }

    pub fn translated(mut self, dx: f64, dy: f64) -> Self {
        self.shift = [self.shift[0] + dx, self.shift[1] + dy];
        self
    }

    /// Rescale so the enclosed area equals `target`.
    pub fn with_area(self, target: f64) -> Result<Self> {
        let a = self.area()?;
        Ok(self.scaled((target / a).sqrt()))
    }

    /// Add the radial displacement `t·f(θ) + t²·c` to a polar-type curve.
    /// A parametric ellipse is first converted to its polar form.
    pub fn with_radial_bump(&self, f: &TrigSeries, t: f64, c: f64) -> Result<Self> {
        let bump = f.scaled(t).add(&TrigSeries::constant(c), t * t);
        let shape = match &self.shape {
            Shape::Polar { rho } => Shape::Polar { rho: rho.add(&bump, 1.0) },
            Shape::Ellipse { a, b } => Shape::EllipsePolar { a: *a, b: *b, bump },
            Shape::EllipsePolar { a, b, bump: b0 } => {
                Shape::EllipsePolar { a: *a, b: *b, bump: b0.add(&bump, 1.0) }
            }
            _ => {
                return Err(Error::InvalidCurve(
                    "radial perturbations need a polar or elliptic curve".into(),
                ))
            }
        };
        Ok(Self { shape, ..self.clone() })
    }

    /// Parameter values where the curve is only piecewise smooth, including 0 and 2π.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Stadium { eps } => {
                let pieces = stadium_pieces(*eps);
                let perim: f64 = pieces.iter().sum();
                let mut acc = 0.0;
                let mut out = vec![0.0];
                for len in pieces {
                    acc += len;
                    out.push(2.0 * PI * acc / perim);
                }
                *out.last_mut().unwrap() = 2.0 * PI;
                out
            }
            _ => vec![0.0, 2.0 * PI],
        }
    }

    fn local(&self, t: f64) -> CurvePoint {
        match &self.shape {
            Shape::Polar { rho } => polar_point(rho.eval(t), t),
            Shape::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                CurvePoint { p: [a * c, b * s], dp: [-a * s, b * c], ddp: [-a * c, -b * s] }
            }
            Shape::EllipsePolar { a, b, bump } => {
                let (r, dr, ddr) = ellipse_radius(*a, *b, t);
                let (f, df, ddf) = bump.eval(t);
                polar_point((r + f, dr + df, ddr + ddf), t)
            }
            Shape::Stadium { eps } => stadium_point(*eps, t),
            Shape::Fourier { x, y } => {
                let (x0, x1, x2) = x.eval(t);
                let (y0, y1, y2) = y.eval(t);
                CurvePoint { p: [x0, y0], dp: [x1, y1], ddp: [x2, y2] }
            }
        }
    }

    /// Position and parameter derivatives in the global frame.
    pub fn eval(&self, t: f64) -> CurvePoint {
        let l = self.local(t);
        let (sn, cs) = self.rotation.sin_cos();
        let s = self.scale;
        let rot = |v: [f64; 2]| [s * (cs * v[0] - sn * v[1]), s * (sn * v[0] + cs * v[1])];
        let p = rot(l.p);
        CurvePoint {
            p: [p[0] + self.shift[0], p[1] + self.shift[1]],
            dp: rot(l.dp),
            ddp: rot(l.ddp),
        }
    }

    /// Highest trigonometric degree of the parametrization (0 when not a trig polynomial).
    fn trig_degree(&self) -> usize {
        match &self.shape {
            Shape::Polar { rho } => rho.degree(),
            Shape::Fourier { x, y } => x.degree().max(y.degree()),
            Shape::EllipsePolar { bump, .. } => bump.degree(),
            _ => 0,
        }
    }

    /// Enclosed area `½∮(x y' − y x') dθ`, evaluated to machine precision.
    pub fn area(&self) -> Result<f64> {
        let a = match &self.shape {
            Shape::Ellipse { a, b } => PI * a * b * self.scale * self.scale,
            Shape::Stadium { .. } => self.scale * self.scale,
            _ => {
                // trapezoid is exact for trig polynomials of degree < n/2 and
                // spectrally accurate for the polar ellipse
                let n = 4096 + 8 * self.trig_degree();
                let h = 2.0 * PI / n as f64;
                (0..n)
                    .map(|i| {
                        let c = self.eval(i as f64 * h);
                        let x = [c.p[0] - self.shift[0], c.p[1] - self.shift[1]];
                        0.5 * (x[0] * c.dp[1] - x[1] * c.dp[0]) * h
                    })
                    .sum()
            }
        };
        if !(a > 0.0) {
            return Err(Error::InvalidCurve(format!("non-positive enclosed area {a:.3e}")));
        }
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::InvalidCurve(format!("scale must be positive, got {}", self.scale)));
        }
        match &self.shape {
            Shape::Polar { rho } => check_radius(|t| rho.eval(t).0, 16 * rho.degree() + 256),
            Shape::EllipsePolar { a, b, bump } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::InvalidCurve("semi-axes must be positive".into()));
                }
                check_radius(|t| ellipse_radius(*a, *b, t).0 + bump.eval(t).0, 16 * bump.degree() + 256)
            }
            Shape::Ellipse { a, b } if !(*a > 0.0 && *b > 0.0) => {
                Err(Error::InvalidCurve("semi-axes must be positive".into()))
            }
            Shape::Stadium { eps } if !(*eps > 0.0 && PI * eps * eps / 4.0 < 1.0) => {
                Err(Error::InvalidCurve(format!("stadium width {eps} out of range")))
            }
            _ => Ok(()),
        }
    }
}

fn check_radius(rho: impl Fn(f64) -> f64, samples: usize) -> Result<()> {
    let min = (0..samples)
        .map(|i| rho(2.0 * PI * i as f64 / samples as f64))
        .fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveRadius(min))
    }
}

/// Discretized boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub theta: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub tangents: Vec<[f64; 2]>,
    pub normals: Vec<[f64; 2]>,
    pub curvature: Vec<f64>,
    pub weights: Vec<f64>,
    pub jacobian: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| w * f(i)).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Copy with all points translated by `-c`.
    pub fn recentred(&self, c: [f64; 2]) -> Quadrature {
        let mut q = self.clone();
        for p in &mut q.points {
            p[0] -= c[0];
            p[1] -= c[1];
        }
        q
    }

    fn push(&mut self, theta: f64, c: CurvePoint, w_param: f64) {
        let jac = c.dp[0].hypot(c.dp[1]);
        let t = [c.dp[0] / jac, c.dp[1] / jac];
        let kappa = (c.dp[0] * c.ddp[1] - c.dp[1] * c.ddp[0]) / (jac * jac * jac);
        self.theta.push(theta);
        self.points.push(c.p);
        self.tangents.push(t);
        self.normals.push([t[1], -t[0]]);
        self.curvature.push(kappa);
        self.weights.push(w_param * jac);
        self.jacobian.push(jac);
    }
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
}

/// Discretize the curve with `n` nodes. Smooth curves use the periodic
/// trapezoid rule; piecewise curves use Gauss–Legendre on each smooth piece.
pub fn build_quadrature(curve: &BoundaryCurve, n: usize) -> Result<Quadrature> {
    if n < 8 || n % 2 != 0 {
        return Err(Error::BadNodeCount(n));
    }
    curve.validate()?;
    let mut q = Quadrature {
        theta: Vec::with_capacity(n),
        points: Vec::with_capacity(n),
        tangents: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        jacobian: Vec::with_capacity(n),
    };
    let bp = curve.breakpoints();
    if bp.len() == 2 {
        let h = 2.0 * PI / n as f64;
        for i in 0..n {
            let t = i as f64 * h;
            q.push(t, curve.eval(t), h);
        }
    } else {
        let pieces = bp.len() - 1;
        let mut counts: Vec<usize> = bp
            .windows(2)
            .map(|w| ((n as f64 * (w[1] - w[0]) / (2.0 * PI)).round() as usize).max(n / (2 * pieces)))
            .collect();
        let total: usize = counts.iter().sum();
        // short pieces get a floor; the longest absorbs the difference
        let widest = (0..pieces).max_by_key(|&i| counts[i]).unwrap();
        counts[widest] = (counts[widest] + n).saturating_sub(total).max(n / (2 * pieces));
        for (w, &m) in bp.windows(2).zip(&counts) {
            for (t, wt) in gauss_legendre(m, w[0], w[1]) {
                q.push(t, curve.eval(t), wt);
            }
        }
    }
    if let Some(j) = q.jacobian.iter().copied().find(|j| !(*j > 0.0)) {
        return Err(Error::SelfIntersecting(format!("degenerate parametrization speed {j:.3e}")));
    }
    let turning: f64 = q.integrate(|i| q.curvature[i]);
    if (turning - 2.0 * PI).abs() > 1e-3 {
        return Err(Error::SelfIntersecting(format!(
            "total turning {turning:.6} differs from 2π (clockwise or looped curve)"
        )));
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySummary {
    pub area: f64,
    pub perimeter: f64,
    pub boundary_centroid: [f64; 2],
    /// `∫_{∂Ω} |x − x_{∂Ω}|² dσ`
    pub second_moment: f64,
    /// `∫_{∂Ω} (δ_ij − n_i n_j) dσ`
    pub p_matrix: [[f64; 2]; 2],
    /// Spectral radius of `p_matrix`.
    pub lambda: f64,
    /// `|Ω Δ B|` with `B` the disk of area `|Ω|` centred at the boundary centroid;
    /// `None` when the domain is not star-shaped about that centroid.
    pub symdiff: Option<f64>,
}

impl GeometrySummary {
    /// Radius of the disk with the same area.
    pub fn equivalent_radius(&self) -> f64 {
        (self.area / PI).sqrt()
    }
}

pub fn boundary_centroid(q: &Quadrature) -> [f64; 2] {
    let l = q.perimeter();
    [q.integrate(|i| q.points[i][0]) / l, q.integrate(|i| q.points[i][1]) / l]
}

/// All summary fields except `symdiff`, which needs the curve itself.
pub fn geometry_summary(q: &Quadrature) -> GeometrySummary {
    let c = boundary_centroid(q);
    let area = 0.5 * q.integrate(|i| {
        (q.points[i][0] - c[0]) * q.normals[i][0] + (q.points[i][1] - c[1]) * q.normals[i][1]
    });
    let second_moment = q.integrate(|i| {
        let (x, y) = (q.points[i][0] - c[0], q.points[i][1] - c[1]);
        x * x + y * y
    });
    let pxx = q.integrate(|i| 1.0 - q.normals[i][0] * q.normals[i][0]);
    let pyy = q.integrate(|i| 1.0 - q.normals[i][1] * q.normals[i][1]);
    let pxy = q.integrate(|i| -q.normals[i][0] * q.normals[i][1]);
    let half_tr = 0.5 * (pxx + pyy);
    let lambda = half_tr + (0.25 * (pxx - pyy).powi(2) + pxy * pxy).sqrt();
    GeometrySummary {
        area,
        perimeter: q.perimeter(),
        boundary_centroid: c,
        second_moment,
        p_matrix: [[pxx, pxy], [pxy, pyy]],
        lambda,
        symdiff: None,
    }
}

/// Summary including the symmetric difference when it is defined.
pub fn summarize(curve: &BoundaryCurve, q: &Quadrature) -> GeometrySummary {
    let mut gs = geometry_summary(q);
    gs.symdiff = symdiff_with_ball(curve, q).ok();
    gs
}

/// `|Ω Δ B| = ½∮|ρ_c(φ)² − R²| dφ` in polar coordinates about the boundary
/// centroid, with `R` the radius of the disk of area `|Ω|`.
pub fn symdiff_with_ball(curve: &BoundaryCurve, q: &Quadrature) -> Result<f64> {
    let gs = geometry_summary(q);
    let c = gs.boundary_centroid;
    let r2 = gs.area / PI;
    let g = |t: f64| {
        let p = curve.eval(t).p;
        (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) - r2
    };
    // dφ/dt = (x − c) × γ' / |x − c|²
    let integrand = |t: f64| {
        let cp = curve.eval(t);
        let (x, y) = (cp.p[0] - c[0], cp.p[1] - c[1]);
        let rho2 = x * x + y * y;
        let cross = x * cp.dp[1] - y * cp.dp[0];
        (0.5 * (rho2 - r2).abs() * cross / rho2, cross)
    };
    let bp = curve.breakpoints();
    let sub = 64 + 8 * curve.trig_degree();
    let mut total = 0.0;
    for w in bp.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        for j in 0..sub {
            let (a, b) = (w[0] + j as f64 * h, w[0] + (j + 1) as f64 * h);
            let mut cuts = vec![a];
            let probes = 8;
            let mut prev = (a, g(a));
            for s in 1..=probes {
                let t = a + (b - a) * s as f64 / probes as f64;
                let gt = g(t);
                if prev.1 * gt < 0.0 {
                    cuts.push(bisect(&g, prev.0, t));
                }
                prev = (t, gt);
            }
            cuts.push(b);
            for seg in cuts.windows(2) {
                for (t, wt) in gauss_legendre(20, seg[0], seg[1]) {
                    let (v, cross) = integrand(t);
                    if !(cross > 0.0) {
                        return Err(Error::NotStarShaped);
                    }
                    total += wt * v;
                }
            }
        }
    }
    Ok(total)
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) * ga > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Eigenvalue of the Laplace–Beltrami operator on a closed curve of length `L`: `4π²/L²`.
pub fn lb_lambda1(perimeter: f64) -> f64 {
    4.0 * PI * PI / (perimeter * perimeter)
}
