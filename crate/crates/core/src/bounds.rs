//! Isoperimetric-type upper bounds for the first nontrivial Wentzell
//! eigenvalue and verification of the inverse-trace inequality chain.

use crate::error::{Error, Result};
use crate::geometry2d::GeometrySummary;
use crate::omega;
use crate::wentzell_solver::WentzellSpectrum;

/// Chain inequalities are checked to this tolerance, relative to the larger side.
pub const CHAIN_TOLERANCE: f64 = 1e-8;

/// Constant of the quantitative isoperimetric term, `((d+1)/d)(2^{1/d} − 1)/4`.
pub fn gamma_d(d: usize) -> f64 {
    let df = d as f64;
    (df + 1.0) / df * (2f64.powf(1.0 / df) - 1.0) / 4.0
}

/// Which closed form to use for ball eigenvalues of order `l ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallFormula {
    /// Separation of variables: `(l(l+d−2)β + lR)/R²`.
    #[default]
    SeparationOfVariables,
    /// `(l(l+d−2)β + R)/R²`, which only agrees at `l = 1`.
    Printed,
}

/// Wentzell eigenvalue of the ball `B_R` carried by harmonics of order `l`.
pub fn ball_eigenvalue(l: usize, d: usize, beta: f64, r: f64, formula: BallFormula) -> f64 {
    let (lf, df) = (l as f64, d as f64);
    let lb = lf * (lf + df - 2.0) * beta;
    match formula {
        BallFormula::SeparationOfVariables => (lb + lf * r) / (r * r),
        BallFormula::Printed => (lb + r) / (r * r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBounds {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

/// `ω_d^{-1/d} |Ω|^{(d+1)/d}`, the second moment of the equal-volume sphere divided by d.
fn ball_moment_factor(area: f64, d: usize) -> f64 {
    let df = d as f64;
    omega(d).powf(-1.0 / df) * area.powf((df + 1.0) / df)
}

fn quantitative_factor(gs: &GeometrySummary, d: usize) -> Result<f64> {
    let sd = gs.symdiff.ok_or(Error::NotStarShaped)?;
    Ok(1.0 + gamma_d(d) * (sd / gs.area).powi(2))
}

/// `M1 = d(|Ω|+βΛ)/∫|x|²`, `M2` with the quantitative isoperimetric factor, `M3` without it.
pub fn upper_bounds(gs: &GeometrySummary, beta: f64, d: usize) -> Result<UpperBounds> {
    if !(gs.second_moment > 0.0) {
        return Err(Error::Degenerate("zero second boundary moment".into()));
    }
    let num = gs.area + beta * gs.lambda;
    let base = ball_moment_factor(gs.area, d);
    Ok(UpperBounds {
        m1: d as f64 * num / gs.second_moment,
        m2: num / (base * quantitative_factor(gs, d)?),
        m3: num / base,
    })
}

/// One inequality `small ≤ big` with its signed margin.
#[derive(Debug, Clone, PartialEq)]
pub struct Margin {
    pub label: &'static str,
    pub small: f64,
    pub big: f64,
}

impl Margin {
    pub fn margin(&self) -> f64 {
        self.big - self.small
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -CHAIN_TOLERANCE * self.big.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub beta: f64,
    pub lambda1: f64,
    /// `Σ_{i=1}^d 1/λ_i`
    pub s: f64,
    /// `∫|x|²/(|Ω|+βΛ)`
    pub chain_lower_1: f64,
    /// `dω_d^{-1/d}|Ω|^{(d+1)/d}(1+γ_d(|ΩΔB|/|B|)²)/(|Ω|+βΛ)`
    pub chain_lower_2: f64,
    pub bounds: UpperBounds,
    pub gamma_d: f64,
    pub margins: Vec<Margin>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.margins.iter().all(Margin::holds)
    }

    pub fn violations(&self) -> Vec<&Margin> {
        self.margins.iter().filter(|m| !m.holds()).collect()
    }
}

/// Evaluate the whole chain `S ≥ lower₁ ≥ lower₂` and `λ₁ ≤ M1 ≤ M2 ≤ M3` without failing.
pub fn bound_report(spec: &WentzellSpectrum, gs: &GeometrySummary, beta: f64) -> Result<BoundReport> {
    let d = 2;
    let lam = spec.first(d + 1)?;
    let s: f64 = lam[1..].iter().map(|l| 1.0 / l).sum();
    let num = gs.area + beta * gs.lambda;
    let lower1 = gs.second_moment / num;
    let lower2 = d as f64 * ball_moment_factor(gs.area, d) * quantitative_factor(gs, d)? / num;
    let bounds = upper_bounds(gs, beta, d)?;
    let margins = vec![
        Margin { label: "S >= lower1", small: lower1, big: s },
        Margin { label: "lower1 >= lower2", small: lower2, big: lower1 },
        Margin { label: "lambda1 <= d/S", small: lam[1], big: d as f64 / s },
        Margin { label: "lambda1 <= M1", small: lam[1], big: bounds.m1 },
        Margin { label: "M1 <= M2", small: bounds.m1, big: bounds.m2 },
        Margin { label: "M2 <= M3", small: bounds.m2, big: bounds.m3 },
    ];
    Ok(BoundReport {
        beta,
        lambda1: lam[1],
        s,
        chain_lower_1: lower1,
        chain_lower_2: lower2,
        bounds,
        gamma_d: gamma_d(d),
        margins,
    })
}

/// As [`bound_report`], but a violated inequality is an error.
pub fn verify_chain(spec: &WentzellSpectrum, gs: &GeometrySummary, beta: f64) -> Result<BoundReport> {
    if beta < 0.0 {
        return Err(Error::InvalidArgument("the bound chain needs beta >= 0".into()));
    }
    let report = bound_report(spec, gs, beta)?;
    if let Some(v) = report.violations().first() {
        return Err(Error::ChainViolated(format!(
            "{}: {:.12e} vs {:.12e}",
            v.label, v.small, v.big
        )));
    }
    Ok(report)
}

/// Laplace–Beltrami analogues: lower bounds for `S^{LB}` and upper bounds for `λ₁^{LB}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbBounds {
    /// `∫|x|²/Λ`
    pub s_lower_1: f64,
    /// `dω_d^{-1/d}|Ω|^{(d+1)/d}(1+γ_d(…)²)/Λ`
    pub s_lower_2: f64,
    /// `dΛ/∫|x|²`
    pub lambda_upper_1: f64,
    /// `Λ/(ω_d^{-1/d}|Ω|^{(d+1)/d}(1+γ_d(…)²))`
    pub lambda_upper_2: f64,
}

pub fn lb_bounds(gs: &GeometrySummary, d: usize) -> Result<LbBounds> {
    if !(gs.second_moment > 0.0) {
        return Err(Error::Degenerate("zero second boundary moment".into()));
    }
    let q = ball_moment_factor(gs.area, d) * quantitative_factor(gs, d)?;
    Ok(LbBounds {
        s_lower_1: gs.second_moment / gs.lambda,
        s_lower_2: d as f64 * q / gs.lambda,
        lambda_upper_1: d as f64 * gs.lambda / gs.second_moment,
        lambda_upper_2: gs.lambda / q,
    })
}
