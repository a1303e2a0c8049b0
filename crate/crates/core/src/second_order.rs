//! Second-order shape derivatives at the ball: closed forms for the trace of
//! the Hessian-type matrix `E` (`Tr E = Σ λ_k''(0)` over the first cluster),
//! its components, the auxiliary functions `ũ`, and a finite-difference check
//! on area-preserving perturbations of the disk.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry2d::TrigSeries;
use crate::harmonics3d::{eval_y, SphereQuadrature};
use crate::omega;
use crate::shape_derivative::{disk_family, NormalPerturbation};
use crate::trig::{laplace_beltrami, SolidHarmonic2D};
use crate::wentzell_solver::{solve_curve, SolverOptions};

/// Modes 0 and 2 are outside the admissible index set.
pub fn check_mode(l: i64) -> Result<()> {
    if l <= 0 || l == 2 {
        return Err(Error::ExcludedMode(l));
    }
    Ok(())
}

/// Variant of the two-dimensional per-mode factor `G(α, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GForm {
    /// `α(l−2)(l²−2)` in the numerator; agrees with the component formulas and
    /// with finite differences.
    #[default]
    Derived,
    /// `α(l−2)(l²+2)` in the numerator.
    Printed,
}

/// `G(α,l) = (l²−1)/(2(1+l²)) · (2+l²+α(l−2)(l²∓2)+2α²(l−2)l²)/((l−2)l(1+αl))`.
pub fn g_factor(alpha: f64, l: i64, form: GForm) -> Result<f64> {
    check_mode(l)?;
    let lf = l as f64;
    let l2 = lf * lf;
    let mid = match form {
        GForm::Derived => l2 - 2.0,
        GForm::Printed => l2 + 2.0,
    };
    let num = 2.0 + l2 + alpha * (lf - 2.0) * mid + 2.0 * alpha * alpha * (lf - 2.0) * l2;
    Ok((l2 - 1.0) / (2.0 * (1.0 + l2)) * num / ((lf - 2.0) * lf * (1.0 + alpha * lf)))
}

/// `lim_{l→∞} G(α,l) = α + ½` (either form).
pub fn g_limit(alpha: f64) -> f64 {
    alpha + 0.5
}

/// Coefficients (ascending powers of X) of the polynomials `P_0..P_3` in `F(α,l)`.
pub const P_COEFFS: [[i64; 7]; 4] = [
    [-8, 0, 16, 5, 2, 0, 0],
    [-56, -28, 68, 40, 18, 4, 0],
    [-112, 16, 0, 35, 42, 21, 2],
    [-64, -112, -144, -68, 24, 18, 8],
];

/// `P_m(x)` in exact integer arithmetic.
pub fn p_exact(m: usize, x: i64) -> i128 {
    P_COEFFS[m].iter().rev().fold(0i128, |acc, &c| acc * x as i128 + c as i128)
}

fn p_value(m: usize, x: f64) -> f64 {
    P_COEFFS[m].iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

/// Three-dimensional per-mode factor
/// `F(α,l) = (l−1)Σ P_m(l)α^m / ((l(l+1)+1)·l·(1+α(l+1))·(2l+1)·(l−2)·(1+α(l+3)))`.
pub fn f_factor(alpha: f64, l: i64) -> Result<f64> {
    check_mode(l)?;
    let lf = l as f64;
    let poly: f64 = (0..4).map(|m| p_value(m, lf) * alpha.powi(m as i32)).sum();
    let den = (lf * (lf + 1.0) + 1.0) * lf * (1.0 + alpha * (lf + 1.0)) * (2.0 * lf + 1.0) * (lf - 2.0) * (1.0 + alpha * (lf + 3.0));
    Ok((lf - 1.0) * poly / den)
}

/// `(A_{l,α}, B_{l,α})` of the three-dimensional `Tr E¹`.
pub fn trace_e1_3d(alpha: f64, l: i64) -> Result<(f64, f64)> {
    check_mode(l)?;
    let lf = l as f64;
    let a = lf / (2.0 * lf + 1.0) * (lf + 2.0) / (lf - 2.0) * (4.0 * alpha + 2.0 * lf) * (1.0 + alpha * (3.0 - lf))
        / (1.0 + alpha * (lf + 1.0));
    let b = (lf + 1.0) / lf * (lf - 1.0) / lf * (4.0 * alpha + 2.0) * (1.0 + alpha * (4.0 + lf)) / (1.0 + alpha * (3.0 + lf));
    Ok((a, b))
}

/// Attempt to rebuild `F·(l(l+1)+1)` at `R = 1` from `A + B` and the `Tr E²` closed form
/// `(d α + 1)·l(l+1) + 1` (per unit `K`, `d = 3`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FReconstruction {
    pub printed: f64,
    pub rebuilt: f64,
}

impl FReconstruction {
    pub fn residual(&self) -> f64 {
        (self.printed - self.rebuilt).abs()
    }
}

pub fn f_reconstruction(alpha: f64, l: i64) -> Result<FReconstruction> {
    let (a, b) = trace_e1_3d(alpha, l)?;
    let lf = l as f64;
    let q = lf * (lf + 1.0) + 1.0;
    Ok(FReconstruction {
        printed: f_factor(alpha, l)? * q,
        rebuilt: a + b + (3.0 * alpha + 1.0) * lf * (lf + 1.0) + 1.0,
    })
}

/// Normalization constant `K(R)` multiplying the trace formulas.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KConvention {
    /// `d/(ω_{d−1} R^{d+2})`.
    SphereMeasure,
    /// `d/(ω_d R^{d+2})`; the constant of the per-mode `G`/`F` closed forms.
    PerMode,
    /// `1/(ω_d R^{d+2})`, from `Σ|∂_n u_i|²` of the normalized coordinate eigenfunctions;
    /// the constant of the `Tr E²` closed form.
    #[default]
    Derived,
    /// `k₁/R^{d+2}` with `k₁` measured at `R = 1`.
    Calibrated(f64),
}

pub fn k_value(conv: KConvention, d: usize, r: f64) -> f64 {
    let rp = r.powi(d as i32 + 2);
    match conv {
        KConvention::SphereMeasure => d as f64 / (omega(d - 1) * rp),
        KConvention::PerMode => d as f64 / (omega(d) * rp),
        KConvention::Derived => 1.0 / (omega(d) * rp),
        KConvention::Calibrated(k1) => k1 / rp,
    }
}

/// `(∮V², ∮|∇_τV|²)` on the sphere of radius `R` in dimension `d`.
pub fn boundary_norms(v: &NormalPerturbation, d: usize, r: f64) -> Result<(f64, f64)> {
    match (v, d) {
        (NormalPerturbation::Planar { f }, 2) => {
            let grad = (1..=f.degree())
                .map(|k| {
                    let (c, s) = f.coeff(k);
                    (k * k) as f64 * PI * (c * c + s * s)
                })
                .sum::<f64>()
                / r;
            Ok((r * f.l2_squared(), grad))
        }
        (NormalPerturbation::Spherical { radius, modes }, 3) => {
            if (radius - r).abs() > 1e-14 * r {
                return Err(Error::InvalidArgument("perturbation radius differs from the ball".into()));
            }
            let lmax = modes.iter().map(|(i, _)| i.l).max().unwrap_or(0) as usize;
            let sq = SphereQuadrature::for_degree(2 * lmax + 2);
            let (mut vv, mut gg) = (0.0, 0.0);
            for n in sq.nodes() {
                let (mut val, mut lap) = (0.0, 0.0);
                for &(i, c) in modes {
                    let y = (c * eval_y(i, n.theta, n.phi)).re * r.powi(i.l as i32);
                    val += y;
                    lap += (i.l * (i.l + 1)) as f64 / (r * r) * y;
                }
                vv += n.weight * r * r * val * val;
                gg += n.weight * r * r * val * lap;
            }
            Ok((vv, gg))
        }
        _ => Err(Error::InvalidArgument(format!("perturbation kind does not match d={d}"))),
    }
}

fn modes_present(v: &NormalPerturbation) -> Vec<i64> {
    match v {
        NormalPerturbation::Planar { f } => {
            let mut out: Vec<i64> = (1..=f.degree())
                .filter(|&k| {
                    let (c, s) = f.coeff(k);
                    c != 0.0 || s != 0.0
                })
                .map(|k| k as i64)
                .collect();
            if f.a0 != 0.0 {
                out.insert(0, 0);
            }
            out
        }
        NormalPerturbation::Spherical { modes, .. } => {
            let mut out: Vec<i64> = modes.iter().filter(|(_, c)| c.norm() != 0.0).map(|(i, _)| i.l).collect();
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

fn check_modes(v: &NormalPerturbation) -> Result<()> {
    modes_present(v).into_iter().try_for_each(check_mode)
}

/// `Tr E² = −(dβ+R)RK∮|∇_τV|² − K∮V²`.
pub fn trace_e2(v: &NormalPerturbation, d: usize, beta: f64, r: f64, conv: KConvention) -> Result<f64> {
    check_modes(v)?;
    let (vv, gg) = boundary_norms(v, d, r)?;
    let k = k_value(conv, d, r);
    Ok(-(d as f64 * beta + r) * r * k * gg - k * vv)
}

/// The component traces whose sum is `Tr E²`, as stated family by family.
pub fn family_traces(v: &NormalPerturbation, d: usize, beta: f64, r: f64, conv: KConvention) -> Result<Vec<(&'static str, f64)>> {
    check_modes(v)?;
    let (vv, gg) = boundary_norms(v, d, r)?;
    let k = k_value(conv, d, r);
    let dm1 = d as f64 - 1.0;
    Ok(vec![
        ("D(2,1)", 0.0),
        ("D(2,2)", 0.0),
        ("D(2,3)", -2.0 * beta * dm1 * k / r * vv),
        ("B(2,1)", 0.0),
        ("B(2,2)", 0.0),
        ("B(2,3)", -beta * dm1 * r * k * gg),
        ("B(2,4)", 2.0 * beta * k / r * vv),
        ("A(2,1)", 0.0),
        ("A(2,2)", 0.0),
        ("A(2,3)", -k * vv),
        ("C(2,1..4)", -(dm1 * beta + r) * r * k * gg),
    ])
}

pub fn family_sum(v: &NormalPerturbation, d: usize, beta: f64, r: f64, conv: KConvention) -> Result<f64> {
    Ok(family_traces(v, d, beta, r, conv)?.iter().map(|(_, t)| t).sum())
}

/// Powers of `R` in the coefficients of `ũ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusPowers {
    /// `R^{5/2}` and `R^{1/2}`: the solution of the boundary equation for every `R`.
    #[default]
    Derived,
    /// `R^{7/2}` and `R^{3/2}`; identical at `R = 1`.
    Printed,
}

/// `ũ` for `V_n = R^k(v₁ cos kθ + v₂ sin kθ)` and the normalized coordinate
/// eigenfunctions `u_j = x_j/√(πR³)` of the disk:
/// `ũ₁ = a r^{k+1}[v₁cos(k+1)θ + v₂sin(k+1)θ] + c r^{k−1}[v₁cos(k−1)θ + v₂sin(k−1)θ]`,
/// `ũ₂ = a r^{k+1}[−v₂cos(k+1)θ + v₁sin(k+1)θ] + c r^{k−1}[v₂cos(k−1)θ − v₁sin(k−1)θ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeU2d {
    pub k: i64,
    /// `a`, coefficient of the `r^{k+1}` terms.
    pub upper: f64,
    /// `c`, coefficient of the `r^{k−1}` terms.
    pub lower: f64,
}

pub fn tilde_u_2d(k: i64, beta: f64, r: f64, powers: RadiusPowers) -> Result<TildeU2d> {
    check_mode(k)?;
    let kf = k as f64;
    let (pu, pl) = match powers {
        RadiusPowers::Derived => (2.5, 0.5),
        RadiusPowers::Printed => (3.5, 1.5),
    };
    let sp = PI.sqrt();
    Ok(TildeU2d {
        k,
        upper: (1.0 - kf) / kf / (2.0 * sp * r.powf(pu)),
        lower: (kf + 1.0) / (kf - 2.0) * (beta * (2.0 - kf) + r) / (kf * beta + r) / (2.0 * sp * r.powf(pl)),
    })
}

impl TildeU2d {
    pub fn functions(&self, v1: f64, v2: f64) -> [SolidHarmonic2D; 2] {
        let (hi, lo) = ((self.k + 1) as usize, (self.k - 1) as usize);
        let mut u1 = TrigSeries::default();
        let mut u2 = TrigSeries::default();
        add_mode(&mut u1, hi, self.upper * v1, self.upper * v2);
        add_mode(&mut u1, lo, self.lower * v1, self.lower * v2);
        add_mode(&mut u2, hi, -self.upper * v2, self.upper * v1);
        add_mode(&mut u2, lo, self.lower * v2, -self.lower * v1);
        [SolidHarmonic2D::new(u1), SolidHarmonic2D::new(u2)]
    }
}

fn add_mode(f: &mut TrigSeries, k: usize, c: f64, s: f64) {
    let (c0, s0) = f.coeff(k);
    if k == 0 {
        f.a0 = c0 + c;
    } else {
        f.set_mode(k, c0 + c, s0 + s);
    }
}

/// `u_j = x_j/√(πR³)` as solid harmonics.
fn coordinate_eigenfunctions(r: f64) -> [SolidHarmonic2D; 2] {
    let n0 = 1.0 / (PI * r.powi(3)).sqrt();
    [SolidHarmonic2D::new(TrigSeries::mode(1, n0, 0.0)), SolidHarmonic2D::new(TrigSeries::mode(1, 0.0, n0))]
}

/// Right-hand side of the boundary equation for `ũ` on the circle:
/// `β[Δ_τ(V∂_nu) + div_τ(V(H−2κ)∇_τu)] + div_τ(V∇_τu) + λV(∂_nu + Hu)`.
fn tilde_rhs(u: &SolidHarmonic2D, v: &TrigSeries, beta: f64, r: f64) -> TrigSeries {
    let lambda = (beta + r) / (r * r);
    let h = 1.0 / r;
    let dn = u.normal_derivative(r);
    let dt = u.tangential_derivative(r);
    let tr = u.trace(r);
    // div_τ(g∇_τu) = ∂_τ(g ∂_τu) on a curve
    let div = |g: &TrigSeries| g.mul(&dt).derivative().scaled(1.0 / r);
    let curv = v.scaled(h - 2.0 / r);
    laplace_beltrami(&v.mul(&dn), r)
        .add(&div(&curv), 1.0)
        .scaled(beta)
        .add(&div(v), 1.0)
        .add(&v.mul(&dn.add(&tr, h)), lambda)
}

/// `(−βΔ_τ + ∂_n − λ)ũ` on the circle.
fn tilde_lhs(ut: &SolidHarmonic2D, beta: f64, r: f64) -> TrigSeries {
    let lambda = (beta + r) / (r * r);
    let tr = ut.trace(r);
    laplace_beltrami(&tr, r).scaled(-beta).add(&ut.normal_derivative(r), 1.0).add(&tr, -lambda)
}

/// Largest Fourier coefficient of `LHS − RHS` for `ũ₁` and `ũ₂`.
pub fn tilde_u_residual(k: i64, beta: f64, r: f64, v1: f64, v2: f64, powers: RadiusPowers) -> Result<[f64; 2]> {
    let t = tilde_u_2d(k, beta, r, powers)?;
    let rk = r.powi(k as i32);
    let v = TrigSeries::mode(k as usize, rk * v1, rk * v2);
    let ut = t.functions(v1, v2);
    let u = coordinate_eigenfunctions(r);
    let res = |j: usize| tilde_lhs(&ut[j], beta, r).add(&tilde_rhs(&u[j], &v, beta, r), -1.0).max_abs_coeff();
    Ok([res(0), res(1)])
}

/// `Tr E¹ = Σ_j 2∮V(−∂_nũ_j∂_nu_j − Hλũ_ju_j + (1 + β(H−2κ))∂_τũ_j∂_τu_j)` on the disk,
/// with `ũ` summed over the modes of `V`.
pub fn trace_e1_2d(v: &NormalPerturbation, beta: f64, r: f64) -> Result<f64> {
    let NormalPerturbation::Planar { f } = v else {
        return Err(Error::InvalidArgument("planar perturbation expected".into()));
    };
    check_modes(v)?;
    let lambda = (beta + r) / (r * r);
    let h = 1.0 / r;
    let mut ut = [SolidHarmonic2D::default(), SolidHarmonic2D::default()];
    for k in 1..=f.degree() {
        let (c, s) = f.coeff(k);
        if c == 0.0 && s == 0.0 {
            continue;
        }
        let rk = r.powi(k as i32);
        let t = tilde_u_2d(k as i64, beta, r, RadiusPowers::Derived)?;
        let parts = t.functions(c / rk, s / rk);
        for j in 0..2 {
            ut[j].coeffs = ut[j].coeffs.add(&parts[j].coeffs, 1.0);
        }
    }
    let u = coordinate_eigenfunctions(r);
    let mut total = 0.0;
    for j in 0..2 {
        let integrand = ut[j]
            .normal_derivative(r)
            .mul(&u[j].normal_derivative(r))
            .scaled(-1.0)
            .add(&ut[j].trace(r).mul(&u[j].trace(r)), -h * lambda)
            .add(&ut[j].tangential_derivative(r).mul(&u[j].tangential_derivative(r)), 1.0 + beta * (h - 2.0 / r));
        total += 2.0 * r * f.mul(&integrand).integral();
    }
    Ok(total)
}

/// Per-mode closed form `Tr E = −K Σ_l G(α,l)(l²+1)R^{2l+1}|v_l|²` with
/// `V = Σ (R^l/√π)(v₁ cos lθ + v₂ sin lθ)`.
pub fn trace_e_closed_2d(v: &NormalPerturbation, beta: f64, r: f64, form: GForm, conv: KConvention) -> Result<f64> {
    let NormalPerturbation::Planar { f } = v else {
        return Err(Error::InvalidArgument("planar perturbation expected".into()));
    };
    check_modes(v)?;
    let alpha = beta / r;
    let k = k_value(conv, 2, r);
    let mut total = 0.0;
    for l in 1..=f.degree() {
        let (c, s) = f.coeff(l);
        if c == 0.0 && s == 0.0 {
            continue;
        }
        let lf = l as f64;
        let v_sq = PI * (c * c + s * s) / r.powi(2 * l as i32);
        total -= k * g_factor(alpha, l as i64, form)? * (lf * lf + 1.0) * r.powi(2 * l as i32 + 1) * v_sq;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub alpha: f64,
    /// `(l, contribution)` from the per-mode closed form.
    pub per_mode: Vec<(i64, f64)>,
    pub tr_e1: f64,
    pub tr_e2: f64,
    pub tr_e_total: f64,
    pub k_convention: KConvention,
    pub components: Vec<(&'static str, f64)>,
}

/// Both routes on the disk: components (`Tr E¹` from `ũ`, `Tr E²` with the derived `K`)
/// and the per-mode closed form with `K = d/(ω_dR^{d+2})`.
pub fn trace_report_2d(v: &NormalPerturbation, beta: f64, r: f64) -> Result<TraceReport> {
    let NormalPerturbation::Planar { f } = v else {
        return Err(Error::InvalidArgument("planar perturbation expected".into()));
    };
    let tr_e1 = trace_e1_2d(v, beta, r)?;
    let tr_e2 = trace_e2(v, 2, beta, r, KConvention::Derived)?;
    let mut per_mode = Vec::new();
    for l in modes_present(v) {
        let (c, s) = f.coeff(l as usize);
        let single = NormalPerturbation::planar(TrigSeries::mode(l as usize, c, s));
        per_mode.push((l, trace_e_closed_2d(&single, beta, r, GForm::Derived, KConvention::PerMode)?));
    }
    Ok(TraceReport {
        alpha: beta / r,
        per_mode,
        tr_e1,
        tr_e2,
        tr_e_total: tr_e1 + tr_e2,
        k_convention: KConvention::Derived,
        components: family_traces(v, 2, beta, r, KConvention::Derived)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSecondOptions {
    pub h: f64,
    /// Largest accepted `|D(h) − D(h/2)|`, relative to `max(1, |D|)`.
    pub tolerance: f64,
    pub solver: SolverOptions,
}

impl Default for FdSecondOptions {
    fn default() -> Self {
        Self { h: 1e-2, tolerance: 1e-2, solver: SolverOptions { degree: 40, nodes: 512, ..SolverOptions::default() } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSecond {
    /// Richardson-extrapolated `(λ₁+λ₂)''(0)`.
    pub value: f64,
    pub d_h: f64,
    pub d_h2: f64,
}

/// Second derivative of `λ₁ + λ₂` along `ρ_t = R + t f + t²c` (area preserved to
/// second order), by central differences at `h` and `h/2`.
pub fn fd_second_derivative_sum(f: &TrigSeries, beta: f64, r: f64, opts: &FdSecondOptions) -> Result<FdSecond> {
    let h = opts.h;
    let family = disk_family(r, f, true);
    let ts = [-h, -0.5 * h, 0.0, 0.5 * h, h];
    let sums: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let (_, s) = solve_curve(&family(t)?, beta, &opts.solver)?;
            Ok(s.eigenvalue(1)? + s.eigenvalue(2)?)
        })
        .collect::<Result<_>>()?;
    let d_h = (sums[4] - 2.0 * sums[2] + sums[0]) / (h * h);
    let d_h2 = (sums[3] - 2.0 * sums[2] + sums[1]) / (0.25 * h * h);
    let value = (4.0 * d_h2 - d_h) / 3.0;
    if !((d_h - d_h2).abs() <= opts.tolerance * value.abs().max(1.0)) {
        return Err(Error::NoConvergence((d_h - d_h2).abs()));
    }
    Ok(FdSecond { value, d_h, d_h2 })
}

/// `K(1)` making the per-mode closed form match a measured `Tr E` at `R = 1`.
pub fn calibrate_k(measured: f64, v: &NormalPerturbation, beta: f64, form: GForm) -> Result<f64> {
    let unit = trace_e_closed_2d(v, beta, 1.0, form, KConvention::Calibrated(1.0))?;
    if unit == 0.0 {
        return Err(Error::Degenerate("calibration mode has zero closed-form trace".into()));
    }
    Ok(measured / unit)
}

/// Signs `(P_m(0), P_m(2))` in exact arithmetic.
pub fn p_sign_facts() -> [(i128, i128); 4] {
    [0, 1, 2, 3].map(|m| (p_exact(m, 0), p_exact(m, 2)))
}

/// Exact `Tr E²` difference between the component families and the closed form, in
/// units of `βK`: `−(d−2)(R∮|∇V|² + 2∮V²/R)`.
pub fn family_mismatch(d: usize, r: &BigRational, v_sq: &BigRational, grad_sq: &BigRational) -> BigRational {
    let dm2 = BigRational::from_integer((d as i64 - 2).into());
    if dm2.is_zero() {
        return BigRational::zero();
    }
    let two = BigRational::from_integer(2.into());
    -(dm2 * (r * grad_sq + two * v_sq / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics3d::SphericalHarmonicIndex;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn g_values() {
        for a in [0.0, 0.3, 7.0] {
            assert_eq!(g_factor(a, 1, GForm::Derived).unwrap(), 0.0);
            assert_eq!(g_factor(a, 1, GForm::Printed).unwrap(), 0.0);
        }
        assert_relative_eq!(g_factor(0.0, 3, GForm::Printed).unwrap(), 22.0 / 15.0, epsilon = 1e-15);
        assert_relative_eq!(g_factor(0.0, 3, GForm::Derived).unwrap(), 22.0 / 15.0, epsilon = 1e-15);
        assert_relative_eq!(g_factor(1.0, 3, GForm::Derived).unwrap(), 1.2, epsilon = 1e-15);
        assert!(matches!(g_factor(1.0, 2, GForm::Derived), Err(Error::ExcludedMode(2))));
        assert!(g_factor(1.0, 0, GForm::Derived).is_err());
        assert_relative_eq!(g_factor(10.0, 20000, GForm::Derived).unwrap(), g_limit(10.0), max_relative = 1e-3);
    }

    #[test]
    fn f_and_polynomials() {
        for (p0, p2) in p_sign_facts() {
            assert!(p0 < 0 && p2 > 0);
        }
        assert_eq!(p_exact(0, 3), 2 * 81 + 5 * 27 + 16 * 9 - 8);
        for a in [0.0, 0.1, 1.0, 10.0, 100.0] {
            assert_eq!(f_factor(a, 1).unwrap(), 0.0);
            for l in 3..=50 {
                assert!(f_factor(a, l).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn e1_3d_values() {
        let (a, b) = trace_e1_3d(0.0, 3).unwrap();
        assert_relative_eq!(a, 90.0 / 7.0, epsilon = 1e-13);
        assert_relative_eq!(b, 16.0 / 9.0, epsilon = 1e-13);
        assert_eq!(trace_e1_3d(2.0, 1).unwrap().1, 0.0);
    }

    #[test]
    fn k_conventions() {
        assert_relative_eq!(k_value(KConvention::Derived, 2, 1.0), 1.0 / PI, epsilon = 1e-15);
        assert_relative_eq!(k_value(KConvention::PerMode, 2, 1.0), 2.0 / PI, epsilon = 1e-15);
        assert_relative_eq!(k_value(KConvention::SphereMeasure, 2, 1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(k_value(KConvention::Derived, 3, 2.0), 3.0 / (4.0 * PI * 32.0), epsilon = 1e-15);
    }

    #[test]
    fn e2_and_families() {
        let v = NormalPerturbation::planar(TrigSeries::mode(3, 1.0, 0.0));
        // ∮V² = π, ∮|∇V|² = 9π at R=1
        let e2 = trace_e2(&v, 2, 1.0, 1.0, KConvention::Derived).unwrap();
        assert_relative_eq!(e2, -28.0, epsilon = 1e-12);
        assert_eq!(trace_e2(&v.scaled(0.0), 2, 1.0, 1.0, KConvention::Derived).unwrap(), 0.0);
        assert_relative_eq!(trace_e2(&v.scaled(2.0), 2, 1.0, 1.0, KConvention::Derived).unwrap(), 4.0 * e2, epsilon = 1e-12);
        for beta in [0.0, 0.5, 3.0] {
            for r in [0.5, 1.0, 2.0] {
                let a = family_sum(&v, 2, beta, r, KConvention::Derived).unwrap();
                let b = trace_e2(&v, 2, beta, r, KConvention::Derived).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
        let bad = NormalPerturbation::planar(TrigSeries::mode(2, 1.0, 0.0));
        assert!(matches!(trace_e2(&bad, 2, 1.0, 1.0, KConvention::Derived), Err(Error::ExcludedMode(2))));
    }

    #[test]
    fn families_disagree_in_three_dimensions() {
        let v = NormalPerturbation::spherical(1.5, vec![(SphericalHarmonicIndex::new(3, 1).unwrap(), Complex64::new(0.4, 0.2))]);
        let (vv, gg) = boundary_norms(&v, 3, 1.5).unwrap();
        // ∮|∇V|² = l(l+1)/R² ∮V²
        assert_relative_eq!(gg, 12.0 / 2.25 * vv, max_relative = 1e-12);
        let beta = 0.8;
        let k = k_value(KConvention::Derived, 3, 1.5);
        let diff = family_sum(&v, 3, beta, 1.5, KConvention::Derived).unwrap()
            - trace_e2(&v, 3, beta, 1.5, KConvention::Derived).unwrap();
        assert_relative_eq!(diff, -beta * k * (1.5 * gg + 2.0 * vv / 1.5), max_relative = 1e-12);
        assert!(family_sum(&v, 3, 0.0, 1.5, KConvention::Derived).unwrap() == trace_e2(&v, 3, 0.0, 1.5, KConvention::Derived).unwrap());
    }

    #[test]
    fn tilde_u_coefficients_and_residuals() {
        let t = tilde_u_2d(3, 0.7, 1.0, RadiusPowers::Printed).unwrap();
        assert_relative_eq!(tilde_u_2d(3, 0.0, 1.0, RadiusPowers::Printed).unwrap().upper, -1.0 / (3.0 * PI.sqrt()), epsilon = 1e-15);
        assert_eq!(tilde_u_2d(1, 0.7, 1.3, RadiusPowers::Derived).unwrap().upper, 0.0);
        assert_eq!(t, tilde_u_2d(3, 0.7, 1.0, RadiusPowers::Derived).unwrap());
        assert!(tilde_u_2d(2, 1.0, 1.0, RadiusPowers::Derived).is_err());
        for k in [1, 3, 4, 5, 7] {
            for beta in [0.0, 0.5, 2.0] {
                for r in [1.0, 0.6, 1.7] {
                    let res = tilde_u_residual(k, beta, r, 0.8, -0.3, RadiusPowers::Derived).unwrap();
                    assert!(res[0] < 1e-12 && res[1] < 1e-12, "k={k} β={beta} R={r}: {res:?}");
                }
            }
        }
        let res = tilde_u_residual(3, 1.0, 1.7, 1.0, 0.0, RadiusPowers::Printed).unwrap();
        assert!(res[0] > 1e-3);
    }

    #[test]
    fn e1_closed_values() {
        // Tr E¹ for V = R^k cos kθ, computed symbolically
        let cases: [(i64, fn(f64, f64) -> f64); 4] = [
            (1, |r, b| 2.0 * (r + b) / (r * r)),
            (3, |r, b| -2.0 * r * r * (29.0 * r * r - 44.0 * r * b - 9.0 * b * b) / (3.0 * (r + 3.0 * b))),
            (4, |r, b| -r.powi(4) * (67.0 * r * r - 190.0 * r * b - 32.0 * b * b) / (4.0 * (r + 4.0 * b))),
            (5, |r, b| -2.0 * r.powi(6) * (43.0 * r * r - 174.0 * r * b - 25.0 * b * b) / (5.0 * (r + 5.0 * b))),
        ];
        for (k, want) in cases {
            for (r, b) in [(1.0f64, 0.0), (1.0, 1.0), (1.4, 0.3), (0.8, 5.0)] {
                let v = NormalPerturbation::planar(TrigSeries::mode(k as usize, r.powi(k as i32), 0.0));
                assert_relative_eq!(trace_e1_2d(&v, b, r).unwrap(), want(r, b), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn components_agree_with_derived_g() {
        for l in [1usize, 3, 4, 5, 6, 9] {
            for (beta, r) in [(0.0, 1.0), (1.0, 1.0), (10.0, 1.0), (0.4, 1.7), (3.0, 0.5)] {
                let v = NormalPerturbation::planar(TrigSeries::mode(l, 0.6, -0.2));
                let rep = trace_report_2d(&v, beta, r).unwrap();
                let closed = trace_e_closed_2d(&v, beta, r, GForm::Derived, KConvention::PerMode).unwrap();
                assert!((rep.tr_e_total - closed).abs() < 1e-10 * closed.abs().max(1.0), "l={l} β={beta} R={r}");
            }
        }
        // the printed G does not
        let v = NormalPerturbation::planar(TrigSeries::mode(3, 1.0, 0.0));
        let rep = trace_report_2d(&v, 1.0, 1.0).unwrap();
        let printed = trace_e_closed_2d(&v, 1.0, 1.0, GForm::Printed, KConvention::PerMode).unwrap();
        assert_relative_eq!(rep.tr_e_total, -24.0, epsilon = 1e-10);
        assert!((printed - rep.tr_e_total).abs() > 1.0);
    }

    #[test]
    fn modes_are_additive() {
        let mut f = TrigSeries::mode(3, 0.5, 0.1);
        f.set_mode(4, -0.2, 0.3);
        f.set_mode(5, 0.1, 0.0);
        let v = NormalPerturbation::planar(f.clone());
        let total = trace_report_2d(&v, 0.7, 1.2).unwrap();
        let sum: f64 = total.per_mode.iter().map(|(_, c)| c).sum();
        assert_relative_eq!(total.tr_e_total, sum, max_relative = 1e-12);
    }

    #[test]
    fn fd_matches_closed_form() {
        let f = TrigSeries::mode(3, 1.0, 0.0);
        let fd = fd_second_derivative_sum(&f, 1.0, 1.0, &FdSecondOptions::default()).unwrap();
        assert_relative_eq!(fd.value, -24.0, max_relative = 2e-3);
        let fd2 = fd_second_derivative_sum(&f.scaled(2.0), 1.0, 1.0, &FdSecondOptions { h: 5e-3, ..Default::default() }).unwrap();
        assert_relative_eq!(fd2.value, 4.0 * fd.value, max_relative = 5e-3);
    }
}
