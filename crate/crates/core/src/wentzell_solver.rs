//! Boundary Galerkin solver for the Wentzell eigenproblem on planar domains.
//!
//! Trial functions are the harmonic polynomials of degree ≤ N, i.e. `Re p`
//! and `Im p` for complex polynomials `p`, so the interior Dirichlet form
//! reduces to the boundary integral `½∮(w_i ∂_n w_j + w_j ∂_n w_i)`. Centring
//! the basis at the boundary centroid keeps the linear functions in the trial
//! space. By default the polynomials are orthonormalized on the boundary by an
//! Arnoldi recurrence, which keeps high degrees usable on non-convex domains
//! where the monomials `z^k` are numerically dependent.
//!
//! For smooth curves on the uniform trapezoid grid a Nyström alternative
//! discretizes the Dirichlet-to-Neumann map directly from Green's identity
//! `S[∂_n u] = (½I + K)u` with Kress's log-singular quadrature, and `∂_τ` by
//! Fourier differentiation. It converges spectrally also on strongly concave
//! curves, where the polynomial trial space converges only algebraically; its
//! eigenvalues are not Ritz upper bounds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry2d::{boundary_centroid, build_quadrature, BoundaryCurve, Quadrature};

pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

/// How the complex polynomials behind the harmonic basis are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisKind {
    /// Boundary-orthonormal polynomials from an Arnoldi recurrence in `z`.
    #[default]
    Arnoldi,
    /// Plain monomials `((z − c)/r₀)^k`.
    Monomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Harmonic-polynomial Galerkin; any curve.
    #[default]
    Galerkin,
    /// Boundary-integral Nyström; smooth curves only, `degree` is ignored.
    Nystrom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Highest polynomial degree N of the basis.
    pub degree: usize,
    /// Boundary quadrature nodes; must be at least 8N.
    pub nodes: usize,
    pub rank_tolerance: f64,
    pub basis: BasisKind,
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            degree: 32,
            nodes: 512,
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
            basis: BasisKind::default(),
            method: Method::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_degree(degree: usize) -> Self {
        Self { degree, nodes: (8 * degree).max(256), ..Self::default() }
    }

    pub fn nystrom(nodes: usize) -> Self {
        Self { nodes, method: Method::Nystrom, ..Self::default() }
    }
}

/// `{1} ∪ {Re q_k, Im q_k : 1 ≤ k ≤ N}` with `q_k` a polynomial of degree `k`
/// in `ζ = (z − center)/r₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBasis2D {
    pub degree: usize,
    pub r0: f64,
    pub center: [f64; 2],
    /// Arnoldi coefficients: `h[k][j]` for `j ≤ k+1` defines
    /// `q_{k+1} = (ζ q_k − Σ_{j≤k} h[k][j] q_j) / h[k][k+1]`. Empty for monomials.
    pub hessenberg: Vec<Vec<Complex64>>,
}

/// Values and gradients of every basis function at one point.
pub struct BasisSample {
    pub value: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
}

impl HarmonicBasis2D {
    /// Monomial basis centred at the boundary centroid, scaled by the farthest node.
    pub fn for_quadrature(q: &Quadrature, degree: usize) -> Self {
        let center = boundary_centroid(q);
        let r0 = q
            .points
            .iter()
            .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
            .fold(0.0, f64::max);
        Self { degree, r0, center, hessenberg: vec![] }
    }

    /// Polynomials orthonormal in the weighted boundary inner product of `q`.
    pub fn arnoldi(q: &Quadrature, degree: usize) -> Self {
        let mut basis = Self::for_quadrature(q, degree);
        let n = q.len();
        let total: f64 = q.weights.iter().sum();
        let w: Vec<f64> = q.weights.iter().map(|x| x / total).collect();
        let zeta: Vec<Complex64> = q.points.iter().map(|p| basis.scaled(*p)).collect();
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            (0..n).map(|i| a[i].conj() * b[i] * w[i]).sum()
        };
        let mut cols: Vec<Vec<Complex64>> = vec![vec![Complex64::new(1.0, 0.0); n]];
        for k in 0..degree {
            let mut v: Vec<Complex64> = (0..n).map(|i| zeta[i] * cols[k][i]).collect();
            let mut h = vec![Complex64::new(0.0, 0.0); k + 2];
            // classical Gram–Schmidt, twice
            for _ in 0..2 {
                for (j, c) in cols.iter().enumerate() {
                    let hj = dot(c, &v);
                    for i in 0..n {
                        v[i] -= hj * c[i];
                    }
                    h[j] += hj;
                }
            }
            let norm = dot(&v, &v).re.sqrt();
            h[k + 1] = Complex64::new(norm, 0.0);
            for x in v.iter_mut() {
                *x /= norm;
            }
            cols.push(v);
            basis.hessenberg.push(h);
        }
        basis
    }

    pub fn dim(&self) -> usize {
        2 * self.degree + 1
    }

    fn scaled(&self, p: [f64; 2]) -> Complex64 {
        Complex64::new((p[0] - self.center[0]) / self.r0, (p[1] - self.center[1]) / self.r0)
    }

    /// `q_k(ζ)` and `dq_k/dz` for `k = 0..=N`.
    fn polynomials(&self, p: [f64; 2]) -> (Vec<Complex64>, Vec<Complex64>) {
        let z = self.scaled(p);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut val = vec![one];
        let mut der = vec![zero];
        for k in 0..self.degree {
            let (v, d) = match self.hessenberg.get(k) {
                None => (z * val[k], val[k] + z * der[k]),
                Some(h) => {
                    let mut v = z * val[k];
                    let mut d = val[k] + z * der[k];
                    for j in 0..=k {
                        v -= h[j] * val[j];
                        d -= h[j] * der[j];
                    }
                    (v / h[k + 1], d / h[k + 1])
                }
            };
            val.push(v);
            der.push(d);
        }
        // chain rule for ζ = (z − c)/r₀
        for d in der.iter_mut() {
            *d /= self.r0;
        }
        (val, der)
    }

    pub fn sample(&self, p: [f64; 2]) -> BasisSample {
        let m = self.dim();
        let mut value = vec![0.0; m];
        let mut grad = vec![[0.0; 2]; m];
        value[0] = 1.0;
        let (val, der) = self.polynomials(p);
        for k in 1..=self.degree {
            let (f, d) = (val[k], der[k]);
            // d/dx Re f = Re f', d/dy Re f = -Im f'; d/dx Im f = Im f', d/dy Im f = Re f'
            value[2 * k - 1] = f.re;
            value[2 * k] = f.im;
            grad[2 * k - 1] = [d.re, -d.im];
            grad[2 * k] = [d.im, d.re];
        }
        BasisSample { value, grad }
    }
}

/// Per-node basis values with normal and tangential derivatives (rows = nodes).
struct BasisTraces {
    value: DMatrix<f64>,
    dn: DMatrix<f64>,
    dtau: DMatrix<f64>,
}

fn traces(q: &Quadrature, basis: &HarmonicBasis2D) -> BasisTraces {
    let (n, m) = (q.len(), basis.dim());
    let mut t = BasisTraces {
        value: DMatrix::zeros(n, m),
        dn: DMatrix::zeros(n, m),
        dtau: DMatrix::zeros(n, m),
    };
    for i in 0..n {
        let s = basis.sample(q.points[i]);
        let (nv, tv) = (q.normals[i], q.tangents[i]);
        for j in 0..m {
            let g = s.grad[j];
            t.value[(i, j)] = s.value[j];
            t.dn[(i, j)] = g[0] * nv[0] + g[1] * nv[1];
            t.dtau[(i, j)] = g[0] * tv[0] + g[1] * tv[1];
        }
    }
    t
}

/// Stiffness `A = ∫∇w·∇w + β∮∇_τw·∇_τw` and mass `B = ∮w w`.
pub fn assemble_forms(q: &Quadrature, basis: &HarmonicBasis2D, beta: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = traces(q, basis);
    let w = DVector::from_column_slice(&q.weights);
    let scale_rows = |m: &DMatrix<f64>| {
        let mut out = m.clone();
        for (mut row, wi) in out.row_iter_mut().zip(w.iter()) {
            row *= *wi;
        }
        out
    };
    let vw = scale_rows(&t.value);
    let b = t.value.transpose() * &vw;
    let cross = vw.transpose() * &t.dn;
    let mut a = (&cross + cross.transpose()) * 0.5;
    if beta != 0.0 {
        a += (t.dtau.transpose() * scale_rows(&t.dtau)) * beta;
    }
    // exact symmetry
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    (a, b)
}

/// Generalized symmetric eigenpairs of `(A, B)` by whitening with `B`'s
/// eigendecomposition. Directions with B-eigenvalue below
/// `rank_tolerance × max` are discarded. Eigenvalues ascend; eigenvectors are
/// B-orthonormal.
pub fn solve_spectrum(a: &DMatrix<f64>, b: &DMatrix<f64>, rank_tolerance: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eb = SymmetricEigen::new(b.clone());
    let smax = eb.eigenvalues.iter().copied().fold(0.0, f64::max);
    if !(smax > 0.0) {
        return Err(Error::RankZero);
    }
    let keep: Vec<usize> = (0..eb.eigenvalues.len())
        .filter(|&i| eb.eigenvalues[i] > rank_tolerance * smax)
        .collect();
    if keep.is_empty() {
        return Err(Error::RankZero);
    }
    let m = b.nrows();
    let mut w = DMatrix::zeros(m, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = eb.eigenvalues[i].sqrt();
        w.set_column(c, &(eb.eigenvectors.column(i) / s));
    }
    let at = w.transpose() * a * &w;
    let at = (&at + at.transpose()) * 0.5;
    let ea = SymmetricEigen::new(at);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&i, &j| ea.eigenvalues[i].total_cmp(&ea.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| ea.eigenvalues[i]).collect();
    let mut coeffs = DMatrix::zeros(m, keep.len());
    for (c, &i) in order.iter().enumerate() {
        let mut v = &w * ea.eigenvectors.column(i);
        // deterministic sign: largest entry positive
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        coeffs.set_column(c, &v);
    }
    Ok((values, coeffs))
}

/// Eigenfunctions in the representation of the method that produced them.
#[derive(Debug, Clone)]
pub enum Eigenfunctions {
    /// Basis coefficients, one column per eigenfunction, B-orthonormal.
    Harmonic { basis: HarmonicBasis2D, coefficients: DMatrix<f64> },
    /// Nodal boundary values, one column per eigenfunction, orthonormal in the
    /// quadrature inner product, with the discrete DtN map and `d/dθ`.
    Nodal { values: DMatrix<f64>, dtn: DMatrix<f64>, d_theta: DMatrix<f64> },
}

#[derive(Debug, Clone)]
pub struct WentzellSpectrum {
    pub beta: f64,
    /// Ascending; `eigenvalues[0] ≈ 0` for β ≥ 0.
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Eigenfunctions,
}

impl WentzellSpectrum {
    /// Assemble and solve on an existing quadrature.
    pub fn compute(q: &Quadrature, beta: f64, opts: &SolverOptions) -> Result<Self> {
        if opts.method == Method::Nystrom {
            return nystrom(q, beta);
        }
        if opts.degree == 0 {
            return Err(Error::InvalidArgument("basis degree must be positive".into()));
        }
        if q.len() < 8 * opts.degree {
            return Err(Error::InvalidArgument(format!(
                "{} nodes are too few for degree {} (need at least 8N)",
                q.len(),
                opts.degree
            )));
        }
        let basis = match opts.basis {
            BasisKind::Arnoldi => HarmonicBasis2D::arnoldi(q, opts.degree),
            BasisKind::Monomial => HarmonicBasis2D::for_quadrature(q, opts.degree),
        };
        let (a, b) = assemble_forms(q, &basis, beta);
        let (eigenvalues, coefficients) = solve_spectrum(&a, &b, opts.rank_tolerance)?;
        Ok(Self { beta, eigenvalues, eigenfunctions: Eigenfunctions::Harmonic { basis, coefficients } })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// The first `k` eigenvalues.
    pub fn first(&self, k: usize) -> Result<&[f64]> {
        if k > self.len() {
            return Err(Error::TooManyEigenvalues { requested: k, available: self.len() });
        }
        Ok(&self.eigenvalues[..k])
    }

    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        self.eigenvalues.get(k).copied().ok_or(Error::IndexOutOfRange { index: k, len: self.len() })
    }
}

fn is_uniform_grid(q: &Quadrature) -> bool {
    let n = q.len();
    let h = 2.0 * PI / n as f64;
    n >= 8
        && n % 2 == 0
        && (0..n).all(|i| {
            (q.theta[i] - i as f64 * h).abs() < 1e-12 && (q.weights[i] - h * q.jacobian[i]).abs() <= 1e-12 * q.weights[i]
        })
}

/// Fourier differentiation on `n` (even) equispaced nodes.
fn fourier_diff(n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let k = i as i64 - j as i64;
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * k as f64 * h).tan()
        }
    })
}

/// Nyström Dirichlet-to-Neumann matrix: nodal `∂_n u` from nodal `u`.
fn dtn_matrix(q: &Quadrature) -> Result<DMatrix<f64>> {
    let n = q.len();
    let m = n / 2;
    let h = PI / m as f64;
    let c = boundary_centroid(q);
    let rmax = q.points.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).fold(0.0, f64::max);
    // the shift keeps the log kernel positive and the single layer invertible
    // for every curve; it is invisible on zero-mean densities such as ∂_n u
    let shift = (4.0 * rmax).ln() / (2.0 * PI);
    // Kress weights depend on i − j only
    let kress: Vec<f64> = (0..n)
        .map(|d| {
            let t = d as f64 * h;
            let s: f64 = (1..m).map(|k| (k as f64 * t).cos() / k as f64).sum();
            -2.0 * PI / m as f64 * s - PI / (m * m) as f64 * (m as f64 * t).cos()
        })
        .collect();
    let mut single = DMatrix::zeros(n, n);
    let mut double = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = q.points[i];
        for j in 0..n {
            let sj = q.jacobian[j];
            let smooth = if i == j {
                q.jacobian[i].ln()
            } else {
                let (dx, dy) = (xi[0] - q.points[j][0], xi[1] - q.points[j][1]);
                let r2 = dx * dx + dy * dy;
                let nj = q.normals[j];
                double[(i, j)] = h * sj * (dx * nj[0] + dy * nj[1]) / (2.0 * PI * r2);
                let half = 0.5 * (q.theta[i] - q.theta[j]);
                0.5 * (r2 / (4.0 * half.sin().powi(2))).ln()
            };
            let d = (i + n - j) % n;
            single[(i, j)] = (-(0.5 * kress[d] + h * smooth) / (2.0 * PI) + shift * h) * sj;
        }
        double[(i, i)] = -h * q.jacobian[i] * q.curvature[i] / (4.0 * PI);
    }
    let rhs = double + DMatrix::identity(n, n) * 0.5;
    single.lu().solve(&rhs).ok_or_else(|| Error::Degenerate("singular single-layer matrix".into()))
}

fn nystrom(q: &Quadrature, beta: f64) -> Result<WentzellSpectrum> {
    if !is_uniform_grid(q) {
        return Err(Error::InvalidArgument(
            "the Nyström method needs a smooth curve on the uniform trapezoid grid".into(),
        ));
    }
    let n = q.len();
    let dtn = dtn_matrix(q)?;
    let d_theta = fourier_diff(n);
    let w = DVector::from_column_slice(&q.weights);
    let mut a = DMatrix::from_fn(n, n, |i, j| w[i] * dtn[(i, j)]);
    if beta != 0.0 {
        let h = 2.0 * PI / n as f64;
        let sd = DMatrix::from_fn(n, n, |i, j| d_theta[(i, j)] * (h / q.jacobian[i]).sqrt());
        a += sd.transpose() * sd * beta;
    }
    let isw = w.map(|x| 1.0 / x.sqrt());
    let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]) * isw[i] * isw[j]);
    // the sawtooth (−1)^i is annihilated by Fourier differentiation and would
    // appear as a spurious low mode for large β; drop it from the trial space
    // with a Householder reflection H mapping its whitened direction to e_{n−1}
    let mut v = DVector::from_fn(n, |i, _| if i % 2 == 0 { w[i].sqrt() } else { -w[i].sqrt() });
    v.normalize_mut();
    let mut hv = v.clone();
    hv[n - 1] -= 1.0;
    let hn = hv.norm();
    if hn > 1e-14 {
        hv /= hn;
    } else {
        hv.fill(0.0);
    }
    let reflect = |m: &DMatrix<f64>| {
        let t = m - &hv * (hv.transpose() * m) * 2.0;
        &t - (&t * &hv) * hv.transpose() * 2.0
    };
    let ha = reflect(&a);
    let e = SymmetricEigen::new(ha.view((0, 0), (n - 1, n - 1)).into_owned());
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut values = DMatrix::zeros(n, n - 1);
    for (c, &k) in order.iter().enumerate() {
        let mut y = DVector::zeros(n);
        y.rows_mut(0, n - 1).copy_from(&e.eigenvectors.column(k));
        let y = &y - &hv * (2.0 * hv.dot(&y));
        let mut v = y.component_mul(&isw);
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v.neg_mut();
        }
        values.set_column(c, &v);
    }
    Ok(WentzellSpectrum { beta, eigenvalues, eigenfunctions: Eigenfunctions::Nodal { values, dtn, d_theta } })
}

/// Build the quadrature and solve in one call.
pub fn solve_curve(curve: &BoundaryCurve, beta: f64, opts: &SolverOptions) -> Result<(Quadrature, WentzellSpectrum)> {
    let q = build_quadrature(curve, opts.nodes)?;
    let s = WentzellSpectrum::compute(&q, beta, opts)?;
    Ok((q, s))
}

/// Boundary traces of one eigenfunction at the quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub u: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub dn: Vec<f64>,
    /// Tangential derivative; `∇_τu = dtau · t`.
    pub dtau: Vec<f64>,
}

impl BoundaryTrace {
    pub fn grad_tau(&self, q: &Quadrature, i: usize) -> [f64; 2] {
        [self.dtau[i] * q.tangents[i][0], self.dtau[i] * q.tangents[i][1]]
    }
}

pub fn eigenfunction_boundary_data(spec: &WentzellSpectrum, k: usize, q: &Quadrature) -> Result<BoundaryTrace> {
    if k >= spec.len() {
        return Err(Error::IndexOutOfRange { index: k, len: spec.len() });
    }
    let n = q.len();
    let mut out = BoundaryTrace {
        u: Vec::with_capacity(n),
        grad: Vec::with_capacity(n),
        dn: Vec::with_capacity(n),
        dtau: Vec::with_capacity(n),
    };
    match &spec.eigenfunctions {
        Eigenfunctions::Harmonic { basis, coefficients } => {
            let c = coefficients.column(k);
            for i in 0..n {
                let s = basis.sample(q.points[i]);
                let (mut u, mut gx, mut gy) = (0.0, 0.0, 0.0);
                for j in 0..basis.dim() {
                    u += c[j] * s.value[j];
                    gx += c[j] * s.grad[j][0];
                    gy += c[j] * s.grad[j][1];
                }
                let (nv, tv) = (q.normals[i], q.tangents[i]);
                out.u.push(u);
                out.grad.push([gx, gy]);
                out.dn.push(gx * nv[0] + gy * nv[1]);
                out.dtau.push(gx * tv[0] + gy * tv[1]);
            }
        }
        Eigenfunctions::Nodal { values, dtn, d_theta } => {
            if values.nrows() != n {
                return Err(Error::InvalidArgument(format!(
                    "nodal eigenfunctions live on {} nodes, not {n}",
                    values.nrows()
                )));
            }
            let u = values.column(k);
            let dn = dtn * u;
            let dt = d_theta * u;
            for i in 0..n {
                let dtau = dt[i] / q.jacobian[i];
                let (nv, tv) = (q.normals[i], q.tangents[i]);
                out.u.push(u[i]);
                out.grad.push([dn[i] * nv[0] + dtau * tv[0], dn[i] * nv[1] + dtau * tv[1]]);
                out.dn.push(dn[i]);
                out.dtau.push(dtau);
            }
        }
    }
    Ok(out)
}

/// First nonzero Laplace–Beltrami eigenvalue of a closed curve, `4π²/L²`.
pub fn lb_lambda1_2d(q: &Quadrature) -> f64 {
    crate::geometry2d::lb_lambda1(q.perimeter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn disk(beta: f64, degree: usize) -> (Quadrature, WentzellSpectrum) {
        solve_curve(&BoundaryCurve::circle(1.0), beta, &SolverOptions::with_degree(degree)).unwrap()
    }

    #[test]
    fn forms_on_unit_circle_degree_one() {
        let q = build_quadrature(&BoundaryCurve::circle(1.0), 64).unwrap();
        let basis = HarmonicBasis2D::for_quadrature(&q, 1);
        let (a, b) = assemble_forms(&q, &basis, 0.0);
        assert_relative_eq!(b[(0, 0)], 2.0 * PI, epsilon = 1e-13);
        for j in 0..3 {
            assert_relative_eq!(a[(0, j)], 0.0, epsilon = 1e-13);
        }
        for i in 1..3 {
            assert_relative_eq!(a[(i, i)], PI, epsilon = 1e-13);
            assert_relative_eq!(b[(i, i)], PI, epsilon = 1e-13);
        }
        assert_relative_eq!(a[(1, 2)], 0.0, epsilon = 1e-13);
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn disk_spectrum_by_separation_of_variables() {
        for beta in [0.0, 1.0, 2.5] {
            let (_, s) = disk(beta, 16);
            assert!(s.eigenvalues[0].abs() < 1e-10);
            for l in 1..=6 {
                let exact = beta * (l * l) as f64 + l as f64;
                assert_relative_eq!(s.eigenvalues[2 * l - 1], exact, max_relative = 1e-10);
                assert_relative_eq!(s.eigenvalues[2 * l], exact, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn eigenvectors_are_b_orthonormal() {
        let curve = BoundaryCurve::ellipse(1.5, 0.8);
        let (q, s) = solve_curve(&curve, 1.0, &SolverOptions::with_degree(20)).unwrap();
        let Eigenfunctions::Harmonic { basis, coefficients } = &s.eigenfunctions else { unreachable!() };
        let (_, b) = assemble_forms(&q, basis, 0.0);
        let k = 8;
        let c = coefficients.columns(0, k);
        let gram = c.transpose() * b * c;
        for i in 0..k {
            for j in 0..k {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - e).abs() < 1e-8, "gram[{i},{j}] = {}", gram[(i, j)]);
            }
        }
    }

    #[test]
    fn disk_first_eigenfunctions_are_coordinates() {
        let (q, s) = disk(1.0, 8);
        let u1 = eigenfunction_boundary_data(&s, 1, &q).unwrap();
        let u2 = eigenfunction_boundary_data(&s, 2, &q).unwrap();
        let mut sum_tau = Vec::new();
        for i in 0..q.len() {
            assert_relative_eq!(u1.dn[i], u1.u[i], epsilon = 1e-10);
            sum_tau.push(u1.dtau[i].powi(2) + u2.dtau[i].powi(2));
        }
        for v in sum_tau {
            assert_relative_eq!(v, 1.0 / PI, epsilon = 1e-10);
        }
        assert!(q.integrate(|i| u1.u[i] * u2.u[i]).abs() < 1e-12);
        assert!(eigenfunction_boundary_data(&s, s.len(), &q).is_err());
    }

    #[test]
    fn nystrom_disk_is_exact() {
        for beta in [0.0, 1.0, 10.0] {
            let (q, s) = solve_curve(&BoundaryCurve::circle(1.3), beta, &SolverOptions::nystrom(128)).unwrap();
            assert!(s.eigenvalues[0].abs() < 1e-10);
            for l in 1..=6 {
                let exact = (beta * (l * l) as f64 + 1.3 * l as f64) / (1.3 * 1.3);
                assert_relative_eq!(s.eigenvalues[2 * l - 1], exact, max_relative = 1e-10);
                assert_relative_eq!(s.eigenvalues[2 * l], exact, max_relative = 1e-10);
            }
            let u = eigenfunction_boundary_data(&s, 1, &q).unwrap();
            assert_relative_eq!(q.integrate(|i| u.u[i] * u.u[i]), 1.0, epsilon = 1e-12);
            for i in 0..q.len() {
                assert_relative_eq!(u.dn[i], u.u[i] / 1.3, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn nystrom_agrees_with_galerkin_on_ellipse() {
        let c = BoundaryCurve::ellipse(1.5, 0.7);
        let (_, g) = solve_curve(&c, 2.0, &SolverOptions::with_degree(48)).unwrap();
        let (qn, n) = solve_curve(&c, 2.0, &SolverOptions::nystrom(256)).unwrap();
        for k in 1..8 {
            assert_relative_eq!(n.eigenvalues[k], g.eigenvalues[k], max_relative = 1e-9);
        }
        assert!(eigenfunction_boundary_data(&n, 1, &qn).is_ok());
        let coarse = build_quadrature(&c, 128).unwrap();
        assert!(eigenfunction_boundary_data(&n, 1, &coarse).is_err());
    }

    #[test]
    fn nystrom_rejects_piecewise_curves() {
        let q = build_quadrature(&BoundaryCurve::stadium(0.5), 256).unwrap();
        assert!(WentzellSpectrum::compute(&q, 1.0, &SolverOptions::nystrom(256)).is_err());
    }

    #[test]
    fn rank_zero_mass_is_an_error() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(solve_spectrum(&z, &z, 1e-12).unwrap_err(), Error::RankZero);
    }

    #[test]
    fn lb_on_unit_circle() {
        let q = build_quadrature(&BoundaryCurve::circle(1.0), 64).unwrap();
        assert_relative_eq!(lb_lambda1_2d(&q), 1.0, epsilon = 1e-14);
    }
}
