//! First-order shape derivatives of (possibly multiple) Wentzell eigenvalues:
//! the derivative matrix `M(V_n)` of an eigenvalue group, its closed form on
//! balls, and finite-difference branch slopes used to validate it.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry2d::{BoundaryCurve, Quadrature, TrigSeries};
use crate::harmonics3d::{eval_y, SphereQuadrature, SphericalHarmonicIndex};
use crate::omega;
use crate::wentzell_solver::{eigenfunction_boundary_data, solve_curve, SolverOptions, WentzellSpectrum};

/// Eigenvalues closer than this (relative) are treated as one group.
pub const CLUSTER_TOLERANCE: f64 = 1e-6;
const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// Normal component of a boundary deformation.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalPerturbation {
    /// `V_n = f(θ)` as a function of the polar angle.
    Planar { f: TrigSeries },
    /// `V_n = Re Σ v_{l,m} R^l Y_l^m` on the sphere of radius `R`.
    Spherical { radius: f64, modes: Vec<(SphericalHarmonicIndex, Complex64)> },
}

impl NormalPerturbation {
    pub fn planar(f: TrigSeries) -> Self {
        Self::Planar { f }
    }

    /// `V_n = Σ (R^l/√π)(v₁ cos lθ + v₂ sin lθ)`.
    pub fn from_modes(radius: f64, modes: &[(usize, f64, f64)]) -> Self {
        let mut f = TrigSeries::default();
        for &(l, v1, v2) in modes {
            let s = radius.powi(l as i32) / PI.sqrt();
            let (c0, s0) = f.coeff(l);
            f.set_mode(l, c0 + s * v1, s0 + s * v2);
        }
        Self::Planar { f }
    }

    pub fn spherical(radius: f64, modes: Vec<(SphericalHarmonicIndex, Complex64)>) -> Self {
        Self::Spherical { radius, modes }
    }

    /// Volume preserving at first order: no constant mode.
    pub fn is_volume_preserving(&self) -> bool {
        match self {
            Self::Planar { f } => f.a0 == 0.0,
            Self::Spherical { modes, .. } => modes.iter().all(|(i, v)| i.l != 0 || v.norm() == 0.0),
        }
    }

    /// Constant radial shift `c` making `ρ_t = R + t f + t²c` area preserving to second order.
    pub fn second_order_shift(&self, radius: f64) -> Result<f64> {
        match self {
            Self::Planar { f } => Ok(-f.l2_squared() / (4.0 * PI * radius)),
            Self::Spherical { .. } => {
                Err(Error::InvalidArgument("second-order compensation is only implemented in 2D".into()))
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Self::Planar { f } => Self::Planar { f: f.scaled(s) },
            Self::Spherical { radius, modes } => Self::Spherical {
                radius: *radius,
                modes: modes.iter().map(|&(i, v)| (i, v * s)).collect(),
            },
        }
    }

    pub fn add(&self, other: &Self, weight: f64) -> Result<Self> {
        match (self, other) {
            (Self::Planar { f }, Self::Planar { f: g }) => Ok(Self::Planar { f: f.add(g, weight) }),
            (Self::Spherical { radius, modes }, Self::Spherical { radius: r2, modes: m2 }) if radius == r2 => {
                let mut out = modes.clone();
                out.extend(m2.iter().map(|&(i, v)| (i, v * weight)));
                Ok(Self::Spherical { radius: *radius, modes: out })
            }
            _ => Err(Error::InvalidArgument("perturbations of different kinds".into())),
        }
    }

    /// Value at a point of the unit sphere given by `(θ, φ)`.
    fn spherical_value(radius: f64, modes: &[(SphericalHarmonicIndex, Complex64)], theta: f64, phi: f64) -> f64 {
        modes
            .iter()
            .map(|&(i, v)| (v * eval_y(i, theta, phi)).re * radius.powi(i.l as i32))
            .sum()
    }
}

/// `V_n` at the quadrature nodes of a curve deformed by `ρ ↦ ρ + t f(φ)`, with φ the
/// polar angle in the curve's own frame: `V_n = f(φ)·(e_r·n)`.
pub fn polar_normal_velocity(curve: &BoundaryCurve, q: &Quadrature, f: &TrigSeries) -> Vec<f64> {
    let (sn, cs) = curve.rotation.sin_cos();
    q.points
        .iter()
        .zip(&q.normals)
        .map(|(p, n)| {
            let (x, y) = (p[0] - curve.shift[0], p[1] - curve.shift[1]);
            let r = x.hypot(y);
            let phi = (-sn * x + cs * y).atan2(cs * x + sn * y);
            f.eval(phi).0 * (x * n[0] + y * n[1]) / r
        })
        .collect()
}

/// Which boundary condition the derivative refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeModel {
    #[default]
    Wentzell,
    /// β = 0.
    Steklov,
    /// Only the curvature-tensor term, i.e. the coefficient of β.
    LaplaceBeltrami,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeMatrix {
    pub m: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl DerivativeMatrix {
    fn from_matrix(m: DMatrix<f64>) -> Self {
        let mut eigenvalues: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        Self { m, eigenvalues }
    }

    /// One-sided derivatives span `[min eig, max eig]`.
    pub fn subdifferential(&self) -> (f64, f64) {
        (self.eigenvalues[0], *self.eigenvalues.last().unwrap())
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }
}

/// Check that `group` indexes a numerically degenerate cluster of `spec`.
pub fn check_cluster(spec: &WentzellSpectrum, group: &[usize]) -> Result<()> {
    if group.is_empty() {
        return Err(Error::InvalidArgument("empty eigenvalue group".into()));
    }
    let vals: Vec<f64> = group.iter().map(|&k| spec.eigenvalue(k)).collect::<Result<_>>()?;
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / hi.abs().max(1.0);
    if spread > CLUSTER_TOLERANCE {
        return Err(Error::NotDegenerate(spread));
    }
    Ok(())
}

/// Derivative matrix of the eigenvalue group `group` for the normal velocity `vn`
/// sampled at the quadrature nodes.
pub fn derivative_matrix_sampled(
    spec: &WentzellSpectrum,
    group: &[usize],
    q: &Quadrature,
    vn: &[f64],
    model: DerivativeModel,
) -> Result<DerivativeMatrix> {
    if vn.len() != q.len() {
        return Err(Error::InvalidArgument(format!("{} velocity samples for {} nodes", vn.len(), q.len())));
    }
    check_cluster(spec, group)?;
    let traces: Vec<_> = group.iter().map(|&k| eigenfunction_boundary_data(spec, k, q)).collect::<Result<_>>()?;
    let m = group.len();
    let mut gram = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            gram[(j, k)] = q.integrate(|i| traces[j].u[i] * traces[k].u[i]);
        }
    }
    let dev = (gram - DMatrix::identity(m, m)).abs().max();
    if dev > ORTHONORMAL_TOLERANCE {
        return Err(Error::NotOrthonormal(dev));
    }
    let lam = group.iter().map(|&k| spec.eigenvalues[k]).sum::<f64>() / m as f64;
    let beta = spec.beta;
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in j..m {
            let (a, b) = (&traces[j], &traces[k]);
            let v = q.integrate(|i| {
                let kappa = q.curvature[i];
                let tt = a.dtau[i] * b.dtau[i];
                let nn = a.dn[i] * b.dn[i];
                let uu = a.u[i] * b.u[i];
                vn[i]
                    * match model {
                        DerivativeModel::Wentzell => (1.0 - beta * kappa) * tt - nn - lam * kappa * uu,
                        DerivativeModel::Steklov => tt - nn - lam * kappa * uu,
                        DerivativeModel::LaplaceBeltrami => -kappa * tt,
                    }
            });
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    Ok(DerivativeMatrix::from_matrix(out))
}

/// [`derivative_matrix_sampled`] with `V_n` taken from a planar perturbation of `curve`.
pub fn derivative_matrix(
    spec: &WentzellSpectrum,
    group: &[usize],
    curve: &BoundaryCurve,
    q: &Quadrature,
    v: &NormalPerturbation,
    model: DerivativeModel,
) -> Result<DerivativeMatrix> {
    let NormalPerturbation::Planar { f } = v else {
        return Err(Error::InvalidArgument("planar solver needs a planar perturbation".into()));
    };
    derivative_matrix_sampled(spec, group, q, &polar_normal_velocity(curve, q, f), model)
}

/// `λ'(0)` for a simple eigenvalue.
pub fn simple_eigenvalue_derivative(
    spec: &WentzellSpectrum,
    k: usize,
    curve: &BoundaryCurve,
    q: &Quadrature,
    v: &NormalPerturbation,
) -> Result<f64> {
    Ok(derivative_matrix(spec, &[k], curve, q, v, DerivativeModel::Wentzell)?.m[(0, 0)])
}

/// `C(d,R) = (d+1)(1+β(d−2)/R)/(ω_d R^{d+3})`.
fn ball_c(d: usize, beta: f64, r: f64) -> f64 {
    let df = d as f64;
    (df + 1.0) * (1.0 + beta * (df - 2.0) / r) / (omega(d) * r.powi(d as i32 + 3))
}

/// Closed form on the ball `B_R` for the group of the first nontrivial eigenvalue:
/// `M_jk = δ_jk(1+β(d−3)/R)/(ω_dR^{d+1})·∮V − C(d,R)∮V x_j x_k`.
pub fn ball_derivative_matrix(v: &NormalPerturbation, d: usize, beta: f64, r: f64) -> Result<DerivativeMatrix> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    let df = d as f64;
    let diag = (1.0 + beta * (df - 3.0) / r) / (omega(d) * r.powi(d as i32 + 1));
    let c = ball_c(d, beta, r);
    let m = match (v, d) {
        (NormalPerturbation::Planar { f }, 2) => {
            let (c2, s2) = f.coeff(2);
            let int_v = 2.0 * PI * r * f.a0;
            let r3 = r.powi(3);
            let xx = r3 * (PI * f.a0 + 0.5 * PI * c2);
            let yy = r3 * (PI * f.a0 - 0.5 * PI * c2);
            let xy = r3 * 0.5 * PI * s2;
            DMatrix::from_row_slice(2, 2, &[diag * int_v - c * xx, -c * xy, -c * xy, diag * int_v - c * yy])
        }
        (NormalPerturbation::Spherical { radius, modes }, 3) => {
            if (radius - r).abs() > 1e-14 * r {
                return Err(Error::InvalidArgument("perturbation radius differs from the ball".into()));
            }
            let sq = SphereQuadrature::new(24, 48);
            let r2 = r * r;
            let mut m = DMatrix::zeros(3, 3);
            let mut int_v = 0.0;
            for node in sq.nodes() {
                let val = NormalPerturbation::spherical_value(r, modes, node.theta, node.phi) * r2 * node.weight;
                int_v += val;
                let x = node.unit();
                for j in 0..3 {
                    for k in 0..3 {
                        m[(j, k)] -= c * val * r2 * x[j] * x[k];
                    }
                }
            }
            for j in 0..3 {
                m[(j, j)] += diag * int_v;
            }
            m
        }
        _ => return Err(Error::InvalidArgument(format!("perturbation kind does not match d={d}"))),
    };
    Ok(DerivativeMatrix::from_matrix(m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub h: f64,
    /// Largest accepted `|D(h) − D(h/2)|`.
    pub tolerance: f64,
    pub solver: SolverOptions,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { h: 1e-3, tolerance: 5e-2, solver: SolverOptions::with_degree(32) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdSlopes {
    /// Richardson-extrapolated slopes, ascending.
    pub slopes: Vec<f64>,
    /// `max |D(h) − D(h/2)|` over the group.
    pub spread: f64,
}

/// One-sided slopes of the sorted eigenvalues `group` along `family` at `t = 0`.
/// Sorted values are only one-sided smooth where branches cross, so forward
/// differences at `h` and `h/2` are combined as `2D(h/2) − D(h)`.
pub fn fd_branch_derivatives<F>(family: F, beta: f64, group: &[usize], opts: &FdOptions) -> Result<FdSlopes>
where
    F: Fn(f64) -> Result<BoundaryCurve> + Sync,
{
    if group.is_empty() {
        return Err(Error::InvalidArgument("empty eigenvalue group".into()));
    }
    let h = opts.h;
    let spectra: Vec<Vec<f64>> = [0.0, 0.5 * h, h]
        .par_iter()
        .map(|&t| {
            let (_, s) = solve_curve(&family(t)?, beta, &opts.solver)?;
            group.iter().map(|&k| s.eigenvalue(k)).collect()
        })
        .collect::<Result<_>>()?;
    let mut slopes = Vec::with_capacity(group.len());
    let mut spread: f64 = 0.0;
    for i in 0..group.len() {
        let d_h = (spectra[2][i] - spectra[0][i]) / h;
        let d_h2 = (spectra[1][i] - spectra[0][i]) / (0.5 * h);
        spread = spread.max((d_h - d_h2).abs());
        slopes.push(2.0 * d_h2 - d_h);
    }
    if !(spread <= opts.tolerance) {
        return Err(Error::NoConvergence(spread));
    }
    slopes.sort_by(f64::total_cmp);
    Ok(FdSlopes { slopes, spread })
}

/// The family `ρ_t = R + t f + t²c` around the disk of radius `R`.
pub fn disk_family(radius: f64, f: &TrigSeries, second_order: bool) -> impl Fn(f64) -> Result<BoundaryCurve> + Sync {
    let v = NormalPerturbation::planar(f.clone());
    let c = if second_order { v.second_order_shift(radius).unwrap_or(0.0) } else { 0.0 };
    let base = BoundaryCurve::polar(TrigSeries::constant(radius));
    let f = f.clone();
    move |t| base.with_radial_bump(&f, t, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry2d::build_quadrature;
    use approx::assert_relative_eq;

    fn disk_setup(beta: f64) -> (BoundaryCurve, Quadrature, WentzellSpectrum) {
        let curve = BoundaryCurve::circle(1.0);
        let q = build_quadrature(&curve, 256).unwrap();
        let s = WentzellSpectrum::compute(&q, beta, &SolverOptions::with_degree(16)).unwrap();
        (curve, q, s)
    }

    #[test]
    fn disk_cos2_eigenvalues() {
        let (curve, q, s) = disk_setup(10.0);
        let v = NormalPerturbation::planar(TrigSeries::mode(2, 1.0, 0.0));
        let m = derivative_matrix(&s, &[1, 2], &curve, &q, &v, DerivativeModel::Wentzell).unwrap();
        assert_relative_eq!(m.eigenvalues[0], -1.5, epsilon = 1e-9);
        assert_relative_eq!(m.eigenvalues[1], 1.5, epsilon = 1e-9);
        let closed = ball_derivative_matrix(&v, 2, 10.0, 1.0).unwrap();
        assert_relative_eq!(closed.eigenvalues[0], -1.5, epsilon = 1e-14);
        assert_relative_eq!(closed.eigenvalues[1], 1.5, epsilon = 1e-14);
    }

    #[test]
    fn disk_higher_and_translation_modes_vanish() {
        let (curve, q, s) = disk_setup(1.0);
        for l in [1, 3, 4, 5] {
            let v = NormalPerturbation::planar(TrigSeries::mode(l, 0.7, -0.4));
            let m = derivative_matrix(&s, &[1, 2], &curve, &q, &v, DerivativeModel::Wentzell).unwrap();
            assert!(m.m.abs().max() < 1e-9, "l={l}: {}", m.m);
            assert!(ball_derivative_matrix(&v, 2, 1.0, 1.0).unwrap().m.abs().max() < 1e-14);
        }
    }

    #[test]
    fn dilation_matches_ball_eigenvalue_derivative() {
        // V = 1 is a dilation: dλ/dR = −(1 + 2β/R)/R²
        let beta = 0.7;
        let v = NormalPerturbation::planar(TrigSeries::constant(1.0));
        let m = ball_derivative_matrix(&v, 2, beta, 1.3).unwrap();
        let want = -(1.0 + 2.0 * beta / 1.3) / (1.3 * 1.3);
        assert_relative_eq!(m.eigenvalues[0], want, epsilon = 1e-13);
        assert_relative_eq!(m.eigenvalues[1], want, epsilon = 1e-13);
        let s = NormalPerturbation::spherical(1.3, vec![(SphericalHarmonicIndex::new(0, 0).unwrap(), Complex64::new((4.0 * PI).sqrt(), 0.0))]);
        let m3 = ball_derivative_matrix(&s, 3, beta, 1.3).unwrap();
        // d=3: λ = (2β+R)/R², dλ/dR = −(1 + 4β/R)/R²
        let want3 = -(1.0 + 4.0 * beta / 1.3) / (1.3 * 1.3);
        for e in &m3.eigenvalues {
            assert_relative_eq!(*e, want3, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_matches_closed_form_on_disk() {
        let (curve, q, s) = disk_setup(2.5);
        let v = NormalPerturbation::from_modes(1.0, &[(2, 0.3, -1.1), (3, 1.0, 0.2), (5, -0.5, 0.0)]);
        let m = derivative_matrix(&s, &[1, 2], &curve, &q, &v, DerivativeModel::Wentzell).unwrap();
        let c = ball_derivative_matrix(&v, 2, 2.5, 1.0).unwrap();
        // the eigenbasis of a degenerate group is arbitrary; compare spectra
        for (a, b) in m.eigenvalues.iter().zip(&c.eigenvalues) {
            assert_relative_eq!(a, b, epsilon = 1e-8);
        }
        assert!(m.trace().abs() < 1e-10);
    }

    #[test]
    fn three_dimensional_ball_l2_mode_is_traceless() {
        let v = NormalPerturbation::spherical(
            1.0,
            vec![(SphericalHarmonicIndex::new(2, 0).unwrap(), Complex64::new(1.0, 0.0))],
        );
        let m = ball_derivative_matrix(&v, 3, 1.0, 1.0).unwrap();
        assert!(m.trace().abs() < 1e-12);
        let (lo, hi) = m.subdifferential();
        assert!(lo < 0.0 && hi > 0.0);
        let v3 = NormalPerturbation::spherical(
            1.0,
            vec![(SphericalHarmonicIndex::new(3, 1).unwrap(), Complex64::new(1.0, 0.5))],
        );
        assert!(ball_derivative_matrix(&v3, 3, 1.0, 1.0).unwrap().m.abs().max() < 1e-12);
    }

    #[test]
    fn rejects_bad_groups() {
        let (curve, q, s) = disk_setup(1.0);
        let v = NormalPerturbation::planar(TrigSeries::mode(2, 1.0, 0.0));
        assert!(matches!(
            derivative_matrix(&s, &[2, 3], &curve, &q, &v, DerivativeModel::Wentzell),
            Err(Error::NotDegenerate(_))
        ));
        assert!(derivative_matrix(&s, &[], &curve, &q, &v, DerivativeModel::Wentzell).is_err());
    }

    #[test]
    fn zero_perturbation_gives_zero_matrix() {
        let (curve, q, s) = disk_setup(1.0);
        let v = NormalPerturbation::planar(TrigSeries::default());
        for model in [DerivativeModel::Wentzell, DerivativeModel::Steklov, DerivativeModel::LaplaceBeltrami] {
            assert_eq!(derivative_matrix(&s, &[1, 2], &curve, &q, &v, model).unwrap().m.abs().max(), 0.0);
        }
    }

    #[test]
    fn fd_slopes_on_disk() {
        let f = TrigSeries::mode(2, 1.0, 0.0);
        let opts = FdOptions { solver: SolverOptions::with_degree(16), ..Default::default() };
        let fd = fd_branch_derivatives(disk_family(1.0, &f, false), 10.0, &[1, 2], &opts).unwrap();
        assert_relative_eq!(fd.slopes[0], -1.5, epsilon = 5e-3);
        assert_relative_eq!(fd.slopes[1], 1.5, epsilon = 5e-3);
    }
}
