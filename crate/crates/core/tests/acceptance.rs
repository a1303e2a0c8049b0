//! Acceptance suite: one line per criterion, `PASS`/`FAIL`, written straight to
//! stderr so it shows up even when libtest captures output.
//!
//! Criteria listed in `KNOWN_RED` are implemented as stated and are expected to
//! fail; each is explained in the README. They are reported but not asserted.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wentzell::bounds::{ball_eigenvalue, bound_report, BallFormula, BoundReport};
use wentzell::geometry2d::{build_quadrature, summarize, BoundaryCurve, TrigSeries};
use wentzell::harmonics3d::{
    coupling_sum, coupling_sum_closed, orthogonality_sum, three_harmonic_closed_forms, CouplingForm,
    SphericalHarmonicIndex,
};
use wentzell::second_order::{
    calibrate_k, f_factor, fd_second_derivative_sum, g_factor, family_sum, p_sign_facts, tilde_u_residual,
    trace_e2, trace_e_closed_2d, FdSecondOptions, GForm, KConvention, RadiusPowers,
};
use wentzell::shape_derivative::{
    ball_derivative_matrix, derivative_matrix, disk_family, fd_branch_derivatives, DerivativeModel, FdOptions,
    NormalPerturbation,
};
use wentzell::wentzell_solver::{lb_lambda1_2d, solve_curve, SolverOptions, WentzellSpectrum};

const KNOWN_RED: [&str; 3] = ["second-order/printed-G", "trace-consistency/d=3", "harmonics/printed-coupling-sums"];

fn verdict(id: &str, passed: bool, detail: &str) {
    let tag = match (passed, KNOWN_RED.contains(&id)) {
        (true, _) => "PASS",
        (false, false) => "FAIL",
        (false, true) => "FAIL (known)",
    };
    let line = format!("[acceptance] {tag:<12} {id}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    if !KNOWN_RED.contains(&id) {
        assert!(passed, "{id}: {detail}");
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn chain(curve: &BoundaryCurve, beta: f64, opts: &SolverOptions) -> BoundReport {
    let (q, s) = solve_curve(curve, beta, opts).unwrap();
    bound_report(&s, &summarize(curve, &q), beta).unwrap()
}

fn min_margin(r: &BoundReport) -> f64 {
    r.margins.iter().map(|m| m.margin()).fold(f64::INFINITY, f64::min)
}

#[test]
fn ball_spectra() {
    let disk = BoundaryCurve::circle(1.0);
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for beta in [0.1, 1.0, 5.0, 10.0] {
        let t0 = Instant::now();
        let (_, s) = solve_curve(&disk, beta, &SolverOptions::with_degree(16)).unwrap();
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        worst = worst.max(rel(s.eigenvalue(1).unwrap(), ball_eigenvalue(1, 2, beta, 1.0, BallFormula::default())));
    }
    verdict(
        "ball-spectra",
        worst < 1e-8 && slowest < 1.0,
        &format!("max rel err {worst:.2e} (tol 1e-8), slowest case {slowest:.3}s (limit 1s)"),
    );
}

#[test]
fn figure1_ellipse_chain() {
    let t0 = Instant::now();
    let opts = SolverOptions::with_degree(48);
    let mut all_hold = true;
    let mut margin = f64::INFINITY;
    let mut at_zero = f64::INFINITY;
    for i in 0..=7 {
        let t = 0.1 * i as f64;
        let curve = BoundaryCurve::ellipse(t.exp(), (-t).exp()).with_area(PI).unwrap();
        let r = chain(&curve, 1.0, &opts);
        all_hold &= r.holds();
        margin = margin.min(min_margin(&r));
        if i == 0 {
            at_zero = [r.lambda1, r.bounds.m1, r.bounds.m2, r.bounds.m3].iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        "figure1-chain",
        all_hold && at_zero < 1e-6 && secs < 30.0,
        &format!("chain holds at all t: {all_hold} (min margin {margin:.2e}), |value-2| at t=0 {at_zero:.2e}, {secs:.2}s"),
    );
}

#[test]
fn star_domains() {
    // polynomial trial spaces converge slowly on these concave stars; the
    // boundary-integral solver is spectrally accurate and is checked against
    // itself on a finer grid
    let fine = SolverOptions::nystrom(1536);
    let coarse = SolverOptions::nystrom(1024);
    let mut ok = true;
    let mut details = Vec::new();
    for k in [5, 11, 17] {
        let curve = BoundaryCurve::star(k, 1.0).with_area(PI).unwrap();
        let r = chain(&curve, 1.0, &fine);
        let r_coarse = chain(&curve, 1.0, &coarse);
        let converged = rel(r.lambda1, r_coarse.lambda1);
        // λ1 = λ2 by k-fold symmetry, so λ1 ≤ 2/S is an equality
        let strict = r.margins.iter().filter(|m| m.label != "lambda1 <= d/S").all(|m| m.margin() > 0.0);
        let loose = r.bounds.m3 / r.lambda1;
        ok &= r.holds() && strict && loose > 1.5 && converged < 1e-6;
        details.push(format!(
            "k={k}: λ1 {:.9}, min margin {:.2e}, M3/λ1 {loose:.2}, Δλ1(n=1024→1536) {converged:.1e}",
            r.lambda1,
            min_margin(&r)
        ));
    }
    verdict("star-domains", ok, &details.join("; "));
}

#[test]
fn stadium() {
    let opts = SolverOptions { degree: 64, nodes: 1024, ..SolverOptions::default() };
    let mut geom: f64 = 0.0;
    let mut lambdas = Vec::new();
    for eps in [0.5, 0.2, 0.1] {
        let curve = BoundaryCurve::stadium(eps);
        let q = build_quadrature(&curve, opts.nodes).unwrap();
        let gs = summarize(&curve, &q);
        geom = geom.max(rel(gs.perimeter, 2.0 / eps + PI * eps / 2.0)).max(rel(gs.lambda, 2.0 / eps));
        let s = WentzellSpectrum::compute(&q, 1.0, &opts).unwrap();
        lambdas.push(s.eigenvalue(1).unwrap());
    }
    let decreasing = lambdas.windows(2).all(|w| w[1] < w[0]);
    verdict(
        "stadium",
        geom < 1e-6 && decreasing,
        &format!("max rel err of |∂S| and Λ {geom:.2e}; λ1 at ε=0.5,0.2,0.1: {lambdas:.6?}"),
    );
}

#[test]
fn first_order_derivatives() {
    let beta = 10.0;
    let fd = FdOptions::default();
    let disk = BoundaryCurve::circle(1.0);
    let (q, spec) = solve_curve(&disk, beta, &SolverOptions::with_degree(32)).unwrap();
    let mut ok = true;
    let mut details = Vec::new();

    let f2 = TrigSeries::mode(2, 1.0, 0.0);
    let m = ball_derivative_matrix(&NormalPerturbation::planar(f2.clone()), 2, beta, 1.0).unwrap();
    let closed_err = (m.eigenvalues[0] + 1.5).abs().max((m.eigenvalues[1] - 1.5).abs());
    let slopes = fd_branch_derivatives(disk_family(1.0, &f2, false), beta, &[1, 2], &fd).unwrap().slopes;
    let fd_err = (slopes[0] + 1.5).abs().max((slopes[1] - 1.5).abs());
    ok &= closed_err < 1e-12 && fd_err < 5e-3;
    details.push(format!("cos2θ: eig(M) {:?}, FD {slopes:.6?} (err {fd_err:.1e})", m.eigenvalues));

    for l in [1, 3, 4] {
        let f = TrigSeries::mode(l, 1.0, 0.0);
        let v = NormalPerturbation::planar(f.clone());
        let closed = ball_derivative_matrix(&v, 2, beta, 1.0).unwrap().m.abs().max();
        let quad = derivative_matrix(&spec, &[1, 2], &disk, &q, &v, DerivativeModel::Wentzell).unwrap().m.abs().max();
        let s = fd_branch_derivatives(disk_family(1.0, &f, false), beta, &[1, 2], &fd).unwrap().slopes;
        let s_max = s.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        ok &= closed < 1e-12 && quad < 1e-10 && s_max < 5e-4;
        details.push(format!("cos{l}θ: |M| {quad:.1e}, |FD| {s_max:.1e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_trace: f64 = 0.0;
    for _ in 0..10 {
        let mut f = TrigSeries::default();
        for k in 1..=6 {
            f.set_mode(k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let v = NormalPerturbation::planar(f);
        let m = derivative_matrix(&spec, &[1, 2], &disk, &q, &v, DerivativeModel::Wentzell).unwrap();
        worst_trace = worst_trace.max(m.trace().abs());
    }
    ok &= worst_trace < 1e-10;
    details.push(format!("max |tr M| over 10 random volume-preserving V {worst_trace:.1e}"));
    verdict("first-order", ok, &details.join("; "));
}

#[test]
fn second_order_2d() {
    let t0 = Instant::now();
    let ls = [3usize, 4, 5];
    let betas = [0.0, 1.0, 10.0];
    let opts = FdSecondOptions::default();
    let mut fd = vec![[0.0; 3]; 3];
    for (i, &l) in ls.iter().enumerate() {
        for (j, &beta) in betas.iter().enumerate() {
            fd[i][j] = fd_second_derivative_sum(&TrigSeries::mode(l, 1.0, 0.0), beta, 1.0, &opts).unwrap().value;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let negative = fd.iter().flatten().all(|v| *v < 0.0);
    let v = |l: usize| NormalPerturbation::planar(TrigSeries::mode(l, 1.0, 0.0));

    for (id, form) in [("second-order/printed-G", GForm::Printed), ("second-order/corrected-G", GForm::Derived)] {
        // convention-free: ratios to the l=3 mode at the same β
        let mut ratio_err: f64 = 0.0;
        for (j, &beta) in betas.iter().enumerate() {
            let unit = |l: usize| trace_e_closed_2d(&v(l), beta, 1.0, form, KConvention::Calibrated(1.0)).unwrap();
            for (i, &l) in ls.iter().enumerate().skip(1) {
                ratio_err = ratio_err.max(rel(fd[i][j] / fd[0][j], unit(l) / unit(3)));
            }
        }
        let k = calibrate_k(fd[0][1], &v(3), 1.0, form).unwrap();
        let mut abs_err: f64 = 0.0;
        for (i, &l) in ls.iter().enumerate() {
            for (j, &beta) in betas.iter().enumerate() {
                let closed = trace_e_closed_2d(&v(l), beta, 1.0, form, KConvention::Calibrated(k)).unwrap();
                abs_err = abs_err.max(rel(fd[i][j], closed));
            }
        }
        verdict(
            id,
            negative && ratio_err < 0.02 && abs_err < 0.02 && secs < 120.0,
            &format!(
                "FD negative: {negative}; max ratio err {:.2}%, calibrated K(1)={k:.6} (2/π={:.6}), max abs err {:.2}%, {secs:.1}s",
                100.0 * ratio_err,
                2.0 / PI,
                100.0 * abs_err
            ),
        );
    }
}

fn spherical_v(r: f64) -> NormalPerturbation {
    let idx = |l, m| SphericalHarmonicIndex::new(l, m).unwrap();
    NormalPerturbation::spherical(
        r,
        vec![(idx(3, 1), Complex64::new(0.4, 0.2)), (idx(4, -2), Complex64::new(-0.3, 0.1)), (idx(5, 0), Complex64::new(0.25, 0.0))],
    )
}

#[test]
fn trace_formula_consistency() {
    let mut f = TrigSeries::mode(3, 0.7, -0.2);
    f.set_mode(4, 0.1, 0.5);
    f.set_mode(5, -0.3, 0.0);
    for (d, id) in [(2, "trace-consistency/d=2"), (3, "trace-consistency/d=3")] {
        let mut worst: f64 = 0.0;
        for beta in [0.0, 0.5, 1.0, 10.0] {
            for r in [0.5, 1.0, 2.0] {
                let v = if d == 2 { NormalPerturbation::planar(f.clone()) } else { spherical_v(r) };
                let a = family_sum(&v, d, beta, r, KConvention::Derived).unwrap();
                let b = trace_e2(&v, d, beta, r, KConvention::Derived).unwrap();
                worst = worst.max((a - b).abs() / b.abs().max(1e-300));
            }
        }
        verdict(id, worst < 1e-12, &format!("max rel |families − closed form| over β×R grid {worst:.2e} (tol 1e-12)"));
    }

    let signs = p_sign_facts().iter().all(|(p0, p2)| *p0 < 0 && *p2 > 0);
    let alphas = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0];
    let mut g_pos = true;
    let mut f_pos = true;
    for l in 3..=50 {
        for a in alphas {
            g_pos &= g_factor(a, l, GForm::Derived).unwrap() > 0.0 && g_factor(a, l, GForm::Printed).unwrap() > 0.0;
            f_pos &= f_factor(a, l).unwrap() > 0.0;
        }
    }
    verdict(
        "trace-consistency/signs",
        signs && g_pos && f_pos,
        &format!("P_m(0)<0<P_m(2): {signs}; G>0: {g_pos}; F>0: {f_pos} (l=3..50, α∈{alphas:?})"),
    );
}

#[test]
fn harmonics() {
    let checks = three_harmonic_closed_forms(8, 1e-10);
    let worst = checks.iter().map(|c| c.error()).fold(0.0, f64::max);
    verdict(
        "harmonics/three-harmonic-closed-forms",
        checks.iter().all(|c| c.passed()),
        &format!("{} closed forms, max |closed − quadrature| {worst:.2e} (tol 1e-10)", checks.len()),
    );

    let scale = 3.0 / (4.0 * PI);
    for (id, form) in [("harmonics/printed-coupling-sums", CouplingForm::Printed), ("harmonics/corrected-coupling-sums", CouplingForm::Derived)] {
        let mut worst: f64 = 0.0;
        for l in 1..=10 {
            for shift in [-1, 1] {
                let want = scale * coupling_sum_closed(l, shift, form).to_f64().unwrap();
                worst = worst.max((coupling_sum(l, shift) - want).abs());
            }
        }
        verdict(id, worst < 1e-12, &format!("max abs err l≤10 {worst:.2e} (tol 1e-12)"));
    }

    let mut exact = true;
    let mut count = 0;
    for l1 in 0..=10i64 {
        for l2 in 0..=10 {
            for l3 in (l1 - l2).abs()..=(l1 + l2).min(10) {
                for m3 in -l3..=l3 {
                    exact &= orthogonality_sum(l1, l2, l3, m3) == BigRational::one();
                    count += 1;
                }
            }
        }
    }
    verdict("harmonics/3j-orthogonality", exact, &format!("{count} exact rational sums equal 1"));
}

#[test]
fn auxiliary_2d_residual() {
    let mut worst: f64 = 0.0;
    for k in [1, 3, 4, 5] {
        for beta in [0.5, 2.0] {
            for powers in [RadiusPowers::Printed, RadiusPowers::Derived] {
                let r = tilde_u_residual(k, beta, 1.0, 0.8, -0.3, powers).unwrap();
                worst = worst.max(r[0]).max(r[1]);
            }
        }
    }
    verdict("auxiliary-2d-residual", worst < 1e-10, &format!("max Fourier residual {worst:.2e} at R=1 (tol 1e-10)"));
}

#[test]
fn limits() {
    let ellipse = BoundaryCurve::ellipse(0.3f64.exp(), (-0.3f64).exp());
    let beta = 1e4;
    let (q, s) = solve_curve(&ellipse, beta, &SolverOptions::with_degree(32)).unwrap();
    let lb = rel(s.eigenvalue(1).unwrap() / beta, lb_lambda1_2d(&q));

    let opts = SolverOptions::with_degree(32);
    let mut scaling: f64 = 0.0;
    for sc in [0.5, 2.0] {
        let (_, big) = solve_curve(&ellipse.clone().scaled(sc), 1.0, &opts).unwrap();
        let (_, small) = solve_curve(&ellipse, 1.0 / sc, &opts).unwrap();
        for k in 1..6 {
            scaling = scaling.max(rel(big.eigenvalue(k).unwrap(), small.eigenvalue(k).unwrap() / sc));
        }
    }
    verdict(
        "limits",
        lb < 0.01 && scaling < 1e-7,
        &format!("|λ1/β − 4π²/L²|/(4π²/L²) at β=1e4: {lb:.2e} (tol 1e-2); scaling law max rel err {scaling:.2e} (tol 1e-7)"),
    );
}
