//! Experiment runners behind the CLI: each produces CSV tables (one per panel)
//! and a list of invariant checks.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bounds::{ball_eigenvalue, bound_report, BallFormula, BoundReport};
use crate::config::{Command, ExperimentConfig, Family, MethodChoice};
use crate::error::{Error, Result};
use crate::geometry2d::{summarize, BoundaryCurve, TrigSeries};
use crate::harmonics3d::identity_suite;
use crate::second_order::{fd_second_derivative_sum, trace_e_closed_2d, trace_report_2d, FdSecondOptions, GForm, KConvention};
use crate::shape_derivative::{
    ball_derivative_matrix, derivative_matrix, disk_family, fd_branch_derivatives, DerivativeModel, FdOptions,
    NormalPerturbation,
};
use crate::wentzell_solver::{solve_curve, Method, SolverOptions};

/// Floats are written with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().copied().map(fmt_float).collect());
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Write every table as `<dir>/<name>.csv`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            let text = t.to_csv().map_err(std::io::Error::other)?;
            fs::write(&path, text)?;
            out.push(path);
        }
        Ok(out)
    }
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    let method = if cfg.method == MethodChoice::Nystrom { Method::Nystrom } else { Method::Galerkin };
    SolverOptions { degree: cfg.degree, nodes: cfg.nodes, method, ..SolverOptions::default() }
}

fn family_solver(cfg: &ExperimentConfig, family: Family) -> SolverOptions {
    match (cfg.method, family) {
        (MethodChoice::Auto, Family::Star(_)) => SolverOptions::nystrom(cfg.nodes.max(1024)),
        _ => solver(cfg),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Radius of the disk the family passes through at `t`, if it does.
fn disk_radius(family: Family, t: f64, cfg: &ExperimentConfig) -> Option<f64> {
    match family {
        Family::Ellipse | Family::Star(_) if t == 0.0 => Some((cfg.area[0] / PI).sqrt()),
        Family::Disk if t == 0.0 || cfg.modes.iter().all(|m| m.v1 == 0.0 && m.v2 == 0.0) => Some(cfg.radius),
        _ => None,
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::Bounds | Command::Sweep => sweep(cfg),
        Command::EigenCurves => eigen_curves(cfg),
        Command::ShapeDeriv => shape_deriv(cfg),
        Command::SecondOrder => second_order(cfg),
        Command::HarmonicsCheck => Ok(harmonics_check()),
    }
}

fn spectrum(cfg: &ExperimentConfig) -> Result<RunReport> {
    let (family, t, beta) = (cfg.family[0], cfg.t[0], cfg.beta[0]);
    let (_, spec) = solve_curve(&family.curve(t, cfg)?, beta, &family_solver(cfg, family))?;
    let lam = spec.first(cfg.count)?;
    let mut table = Table::new("spectrum", &["index", "lambda"]);
    for (k, l) in lam.iter().enumerate() {
        table.rows.push(vec![k.to_string(), fmt_float(*l)]);
    }
    let mut checks = vec![
        Check::new("lambda0 = 0", lam[0].abs() < 1e-8, format!("lambda0 = {:.3e}", lam[0])),
        Check::new("ascending", lam.windows(2).all(|w| w[0] <= w[1]), ""),
    ];
    if let Some(r) = disk_radius(family, t, cfg) {
        let want = ball_eigenvalue(1, 2, beta, r, BallFormula::default());
        let err = rel(lam[1], want);
        checks.push(Check::new("disk lambda1", err < 1e-8, format!("rel err {err:.3e}")));
    }
    Ok(RunReport { tables: vec![table], checks })
}

fn sweep(cfg: &ExperimentConfig) -> Result<RunReport> {
    let beta = cfg.beta[0];
    let extended = cfg.command == Command::Bounds;
    let mut report = RunReport::default();
    for &family in &cfg.family {
        let opts = family_solver(cfg, family);
        let reports: Vec<BoundReport> = cfg
            .t
            .par_iter()
            .map(|&t| {
                let curve = family.curve(t, cfg)?;
                let (q, spec) = solve_curve(&curve, beta, &opts)?;
                bound_report(&spec, &summarize(&curve, &q), beta)
            })
            .collect::<Result<_>>()?;
        let mut header = vec!["t", "lambda1", "M1", "M2", "M3"];
        if extended {
            header.extend(["S", "lower1", "lower2", "min_margin"]);
        }
        let mut table = Table::new(format!("{}_{family}", cfg.command), &header);
        let mut min_margin = f64::INFINITY;
        for (&t, r) in cfg.t.iter().zip(&reports) {
            let b = r.bounds;
            let margin = r.margins.iter().map(|m| m.margin()).fold(f64::INFINITY, f64::min);
            min_margin = min_margin.min(margin);
            let mut row = vec![t, r.lambda1, b.m1, b.m2, b.m3];
            if extended {
                row.extend([r.s, r.chain_lower_1, r.chain_lower_2, margin]);
            }
            table.push_floats(&row);
            if let Some(radius) = disk_radius(family, t, cfg) {
                let want = ball_eigenvalue(1, 2, beta, radius, BallFormula::default());
                let err = [r.lambda1, b.m1, b.m2, b.m3].iter().map(|v| (v - want).abs()).fold(0.0, f64::max);
                report.checks.push(Check::new(
                    format!("{family} t={t}: lambda1 = M1 = M2 = M3 = {want}"),
                    err < 1e-6,
                    format!("max deviation {err:.3e}"),
                ));
            }
        }
        let violations: Vec<String> = cfg
            .t
            .iter()
            .zip(&reports)
            .flat_map(|(t, r)| r.violations().into_iter().map(move |m| format!("t={t}: {}", m.label)))
            .collect();
        report.checks.push(Check::new(
            format!("{family}: bound chain"),
            violations.is_empty(),
            if violations.is_empty() { format!("min margin {min_margin:.3e}") } else { violations.join("; ") },
        ));
        report.tables.push(table);
    }
    Ok(report)
}

/// Eccentricity of the ellipse with semi-axes `e^t`, `e^{−t}`.
pub fn ellipse_eccentricity(t: f64) -> f64 {
    (1.0 - (-4.0 * t.abs()).exp()).sqrt()
}

fn eigen_curves(cfg: &ExperimentConfig) -> Result<RunReport> {
    let opts = solver(cfg);
    let mut report = RunReport::default();
    for &area in &cfg.area {
        let grid: Vec<(f64, f64)> = cfg.t.iter().flat_map(|&t| cfg.beta.iter().map(move |&b| (t, b))).collect();
        let values: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|&(t, beta)| {
                let curve = BoundaryCurve::ellipse(t.exp(), (-t).exp()).with_area(area)?;
                let (q, spec) = solve_curve(&curve, beta, &opts)?;
                let r = bound_report(&spec, &summarize(&curve, &q), beta)?;
                Ok((r.lambda1, r.bounds.m1))
            })
            .collect::<Result<_>>()?;
        let tag = format!("{}", (area / PI * 1e6).round() / 1e6);
        let header: Vec<String> = std::iter::once("eccentricity".to_string())
            .chain(cfg.beta.iter().map(|b| format!("lambda1_beta{b}")))
            .collect();
        let mut table = Table { name: format!("eigen-curves_area{tag}pi"), header, rows: vec![] };
        let nb = cfg.beta.len();
        let radius = (area / PI).sqrt();
        for (i, &t) in cfg.t.iter().enumerate() {
            let row = &values[i * nb..(i + 1) * nb];
            let mut cells = vec![ellipse_eccentricity(t)];
            cells.extend(row.iter().map(|v| v.0));
            table.push_floats(&cells);
            if t == 0.0 {
                for (&beta, v) in cfg.beta.iter().zip(row) {
                    let want = ball_eigenvalue(1, 2, beta, radius, BallFormula::default());
                    let err = rel(v.0, want);
                    report.checks.push(Check::new(
                        format!("area {tag}pi beta={beta}: disk value"),
                        err < 1e-8,
                        format!("rel err {err:.3e}"),
                    ));
                }
            }
        }
        let above = values.iter().filter(|v| v.0 > v.1 * (1.0 + 1e-8)).count();
        report.checks.push(Check::new(format!("area {tag}pi: lambda1 <= M1"), above == 0, format!("{above} violations")));
        let mut sorted_betas: Vec<usize> = (0..nb).collect();
        sorted_betas.sort_by(|&a, &b| cfg.beta[a].total_cmp(&cfg.beta[b]));
        let monotone = (0..cfg.t.len())
            .all(|i| sorted_betas.windows(2).all(|w| values[i * nb + w[0]].0 <= values[i * nb + w[1]].0 + 1e-10));
        report.checks.push(Check::new(format!("area {tag}pi: lambda1 increasing in beta"), monotone, ""));
        report.tables.push(table);
    }
    Ok(report)
}

fn shape_deriv(cfg: &ExperimentConfig) -> Result<RunReport> {
    let opts = solver(cfg);
    let f = cfg.perturbation();
    let family = disk_family(cfg.radius, &f, false);
    let v = NormalPerturbation::planar(f.clone());
    let mut report = RunReport::default();
    for &beta in &cfg.beta {
        let rows: Vec<[f64; 3]> = cfg
            .t
            .par_iter()
            .map(|&t| {
                let (_, spec) = solve_curve(&family(t)?, beta, &opts)?;
                Ok([spec.eigenvalue(1)?, spec.eigenvalue(2)?, spec.eigenvalue(3)?])
            })
            .collect::<Result<_>>()?;
        let mut table = Table::new(format!("shape-deriv_beta{beta}"), &["t", "lambda1", "lambda2", "lambda3"]);
        for (&t, r) in cfg.t.iter().zip(&rows) {
            table.push_floats(&[t, r[0], r[1], r[2]]);
        }
        report.tables.push(table);

        let closed = ball_derivative_matrix(&v, 2, beta, cfg.radius)?;
        let disk = BoundaryCurve::circle(cfg.radius);
        let (q, spec) = solve_curve(&disk, beta, &opts)?;
        let quad = derivative_matrix(&spec, &[1, 2], &disk, &q, &v, DerivativeModel::Wentzell)?;
        let fd = fd_branch_derivatives(&family, beta, &[1, 2], &FdOptions { h: cfg.h, tolerance: 5e-2, solver: opts })?;
        let mut slopes = Table::new(format!("shape-deriv-slopes_beta{beta}"), &["branch", "closed_form", "quadrature", "fd"]);
        let mut quad_err: f64 = 0.0;
        let mut fd_err: f64 = 0.0;
        for i in 0..2 {
            let (c, qd, d) = (closed.eigenvalues[i], quad.eigenvalues[i], fd.slopes[i]);
            quad_err = quad_err.max((c - qd).abs());
            fd_err = fd_err.max((c - d).abs());
            slopes.rows.push(vec![i.to_string(), fmt_float(c), fmt_float(qd), fmt_float(d)]);
        }
        report.tables.push(slopes);
        report.checks.push(Check::new(
            format!("beta={beta}: quadrature M = closed form"),
            quad_err < 1e-8,
            format!("max |diff| {quad_err:.3e}"),
        ));
        report.checks.push(Check::new(
            format!("beta={beta}: FD slopes = eig(M)"),
            fd_err < 5e-3,
            format!("eig(M) = {:?}, fd = {:?}", closed.eigenvalues, fd.slopes),
        ));
    }
    Ok(report)
}

/// One row of the second-order table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderPoint {
    pub l: i64,
    pub beta: f64,
    pub closed_form: f64,
    pub fd: f64,
}

impl SecondOrderPoint {
    pub fn rel_err(&self) -> f64 {
        rel(self.fd, self.closed_form)
    }
}

/// `(λ₁+λ₂)''` for `f = cos lθ` on the disk: closed form and finite differences.
pub fn second_order_grid(ls: &[i64], betas: &[f64], radius: f64, opts: &FdSecondOptions) -> Result<Vec<SecondOrderPoint>> {
    let grid: Vec<(i64, f64)> = ls.iter().flat_map(|&l| betas.iter().map(move |&b| (l, b))).collect();
    grid.par_iter()
        .map(|&(l, beta)| {
            let f = TrigSeries::mode(l as usize, 1.0, 0.0);
            let v = NormalPerturbation::planar(f.clone());
            let closed_form = trace_e_closed_2d(&v, beta, radius, GForm::Derived, KConvention::PerMode)?;
            let fd = fd_second_derivative_sum(&f, beta, radius, opts)?.value;
            Ok(SecondOrderPoint { l, beta, closed_form, fd })
        })
        .collect()
}

fn second_order(cfg: &ExperimentConfig) -> Result<RunReport> {
    let opts = FdSecondOptions { h: cfg.h, solver: solver(cfg), ..FdSecondOptions::default() };
    let points = second_order_grid(&cfg.l, &cfg.beta, cfg.radius, &opts)?;
    let mut table = Table::new("second-order", &["l", "beta", "closed_form", "fd", "rel_err"]);
    let mut report = RunReport::default();
    for p in &points {
        table.rows.push(vec![
            p.l.to_string(),
            fmt_float(p.beta),
            fmt_float(p.closed_form),
            fmt_float(p.fd),
            fmt_float(p.rel_err()),
        ]);
        report.checks.push(Check::new(
            format!("l={} beta={}: FD negative, within 2% of closed form", p.l, p.beta),
            p.fd < 0.0 && p.rel_err() < 2e-2,
            format!("closed {:.6}, fd {:.6}, rel err {:.3e}", p.closed_form, p.fd, p.rel_err()),
        ));
    }
    report.tables.push(table);
    Ok(report)
}

fn harmonics_check() -> RunReport {
    let mut table = Table::new("harmonics-check", &["identity", "pass"]);
    let mut report = RunReport::default();
    for c in identity_suite() {
        table.rows.push(vec![c.name.clone(), c.passed().to_string()]);
        report.checks.push(Check::new(c.name.clone(), c.passed(), format!("error {:.3e}", c.error())));
    }
    report.tables.push(table);
    report
}

/// Quick internal invariants, independent of any configuration.
pub fn invariant_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let opts = SolverOptions::with_degree(16);
    for beta in [0.1, 1.0, 5.0, 10.0] {
        let got = solve_curve(&BoundaryCurve::circle(1.0), beta, &opts).and_then(|(_, s)| s.eigenvalue(1));
        let want = ball_eigenvalue(1, 2, beta, 1.0, BallFormula::default());
        checks.push(match got {
            Ok(l) => Check::new(format!("disk lambda1 beta={beta}"), rel(l, want) < 1e-8, format!("rel err {:.3e}", rel(l, want))),
            Err(e) => Check::new(format!("disk lambda1 beta={beta}"), false, e.to_string()),
        });
    }
    let ellipse = BoundaryCurve::ellipse(0.3f64.exp(), (-0.3f64).exp());
    checks.push(match solve_curve(&ellipse, 1.0, &SolverOptions::with_degree(32))
        .and_then(|(q, s)| bound_report(&s, &summarize(&ellipse, &q), 1.0))
    {
        Ok(r) => Check::new("ellipse t=0.3 bound chain", r.holds(), format!("{} violations", r.violations().len())),
        Err(e) => Check::new("ellipse t=0.3 bound chain", false, e.to_string()),
    });
    let v = NormalPerturbation::planar(TrigSeries::mode(2, 1.0, 0.0));
    checks.push(match ball_derivative_matrix(&v, 2, 10.0, 1.0) {
        Ok(m) => {
            let err = (m.eigenvalues[0] + 1.5).abs().max((m.eigenvalues[1] - 1.5).abs());
            Check::new("disk cos2 derivative eigenvalues = ±3/2", err < 1e-12, format!("{:?}", m.eigenvalues))
        }
        Err(e) => Check::new("disk cos2 derivative eigenvalues = ±3/2", false, e.to_string()),
    });
    for l in [3usize, 4, 5] {
        let v = NormalPerturbation::planar(TrigSeries::mode(l, 1.0, 0.0));
        let name = format!("second-order components = closed form, l={l}");
        checks.push(
            match (trace_report_2d(&v, 1.0, 1.0), trace_e_closed_2d(&v, 1.0, 1.0, GForm::Derived, KConvention::PerMode)) {
                (Ok(r), Ok(c)) => Check::new(name, rel(r.tr_e_total, c) < 1e-10, format!("{} vs {c}", r.tr_e_total)),
                (Err(e), _) | (_, Err(e)) => Check::new(name, false, e.to_string()),
            },
        );
    }
    let failed: Vec<String> = identity_suite().into_iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    checks.push(Check::new("spherical harmonic identities", failed.is_empty(), failed.join("; ")));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_twelve_digits() {
        assert_eq!(fmt_float(2.0), "2.00000000000e0");
        assert_eq!(fmt_float(-1.0 / 3.0), "-3.33333333333e-1");
    }

    #[test]
    fn csv_quotes_names_with_commas() {
        let mut t = Table::new("x", &["identity", "pass"]);
        t.rows.push(vec!["norm Y[1,0]".into(), "true".into()]);
        assert_eq!(t.to_csv().unwrap(), "identity,pass\n\"norm Y[1,0]\",true\n");
    }

    #[test]
    fn eccentricity_of_family() {
        assert_eq!(ellipse_eccentricity(0.0), 0.0);
        let t: f64 = 0.5;
        let (a, b) = (t.exp(), (-t).exp());
        assert!((ellipse_eccentricity(t) - (1.0 - b * b / (a * a)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spectrum_on_disk() {
        let mut cfg = ExperimentConfig::defaults(Command::Spectrum);
        cfg.set("family", "disk").unwrap();
        cfg.set("beta", "5").unwrap();
        cfg.set("degree", "16").unwrap();
        cfg.set("count", "5").unwrap();
        let r = run(&cfg).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert_eq!(r.tables[0].rows.len(), 5);
    }

    #[test]
    fn invariants_pass() {
        let failed: Vec<_> = invariant_suite().into_iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:?}");
    }
}
