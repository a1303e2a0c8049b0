//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment; list values are
//! comma-separated. A numeric list entry `a:b:n` expands to `n` evenly spaced
//! points from `a` to `b` inclusive.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry2d::{BoundaryCurve, TrigSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Bounds,
    Sweep,
    EigenCurves,
    ShapeDeriv,
    SecondOrder,
    HarmonicsCheck,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::Bounds,
        Command::Sweep,
        Command::EigenCurves,
        Command::ShapeDeriv,
        Command::SecondOrder,
        Command::HarmonicsCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Bounds => "bounds",
            Command::Sweep => "sweep",
            Command::EigenCurves => "eigen-curves",
            Command::ShapeDeriv => "shape-deriv",
            Command::SecondOrder => "second-order",
            Command::HarmonicsCheck => "harmonics-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| config_err("command", format!("unknown subcommand `{s}`")))
    }
}

/// One-parameter curve family; `t` is the family parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Semi-axes `e^t`, `e^{−t}`.
    Ellipse,
    /// `ρ = a(t)(2 + t cos kθ)`; `t = 1` is the star `a(2 + cos kθ)`, `t = 0` the disk.
    Star(usize),
    /// Unit-area stadium of width `t`.
    Stadium,
    /// `ρ = R + t f(θ)` with `f` from the `modes` key.
    Disk,
}

/// Eigensolver selection; `Auto` uses the boundary-integral method on star
/// families (with at least 1024 nodes) and Galerkin elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Galerkin,
    Nystrom,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "galerkin" => Ok(Self::Galerkin),
            "nystrom" => Ok(Self::Nystrom),
            _ => Err(config_err("method", format!("`{s}` is not auto, galerkin or nystrom"))),
        }
    }
}

impl Family {
    pub fn curve(self, t: f64, cfg: &ExperimentConfig) -> Result<BoundaryCurve> {
        match self {
            Family::Ellipse => BoundaryCurve::ellipse(t.exp(), (-t).exp()).with_area(cfg.area[0]),
            Family::Star(k) => {
                let mut rho = TrigSeries::constant(2.0);
                rho.set_mode(k, t, 0.0);
                BoundaryCurve::polar(rho).with_area(cfg.area[0])
            }
            Family::Stadium => Ok(BoundaryCurve::stadium(t)),
            Family::Disk => BoundaryCurve::circle(cfg.radius).with_radial_bump(&cfg.perturbation(), t, 0.0),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Ellipse => f.write_str("ellipse"),
            Family::Star(k) => write!(f, "star{k}"),
            Family::Stadium => f.write_str("stadium"),
            Family::Disk => f.write_str("disk"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || config_err("family", format!("unknown family `{s}` (ellipse, star<k>, stadium, disk)"));
        match s {
            "ellipse" => Ok(Family::Ellipse),
            "stadium" => Ok(Family::Stadium),
            "disk" => Ok(Family::Disk),
            _ => {
                let k: usize = s.strip_prefix("star").ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                Ok(Family::Star(k))
            }
        }
    }
}

/// `f = v₁ cos lθ + v₂ sin lθ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub l: usize,
    pub v1: f64,
    pub v2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub family: Vec<Family>,
    pub t: Vec<f64>,
    pub beta: Vec<f64>,
    pub degree: usize,
    pub nodes: usize,
    pub method: MethodChoice,
    pub modes: Vec<Mode>,
    pub l: Vec<i64>,
    pub h: f64,
    pub radius: f64,
    pub area: Vec<f64>,
    /// Number of eigenvalues written by `spectrum`.
    pub count: usize,
    /// Output directory; one CSV per panel.
    pub output: PathBuf,
}

pub const KEYS: [&str; 14] = [
    "family", "t", "beta", "degree", "nodes", "method", "modes", "l", "h", "radius", "area", "count", "output", "command",
];

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v = match s.trim() {
        "pi" => PI,
        s => match s.strip_suffix("pi") {
            Some(m) => m.trim().parse::<f64>().map(|m| m * PI).map_err(|e| config_err(key, format!("`{s}`: {e}")))?,
            None => s.parse().map_err(|e| config_err(key, format!("`{s}`: {e}")))?,
        },
    };
    if !v.is_finite() {
        return Err(config_err(key, format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|e| config_err(key, format!("`{}`: {e}", s.trim())))
}

fn items(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in items(value) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_f64(key, x)?),
            [a, b, n] => out.extend(linspace(parse_f64(key, a)?, parse_f64(key, b)?, parse_usize(key, n)?)),
            _ => return Err(config_err(key, format!("`{item}` is neither a number nor start:stop:count"))),
        }
    }
    Ok(out)
}

fn parse_mode(item: &str) -> Result<Mode> {
    let parts: Vec<&str> = item.split(':').collect();
    let [l, v1, v2] = parts.as_slice() else {
        return Err(config_err("modes", format!("`{item}` is not l:v1:v2")));
    };
    Ok(Mode { l: parse_usize("modes", l)?, v1: parse_f64("modes", v1)?, v2: parse_f64("modes", v2)? })
}

impl ExperimentConfig {
    /// Defaults reproducing the standard experiment for `command`.
    pub fn defaults(command: Command) -> Self {
        let mut cfg = Self {
            command,
            family: vec![Family::Ellipse],
            t: linspace(0.0, 0.7, 8),
            beta: vec![1.0],
            degree: 32,
            nodes: 512,
            method: MethodChoice::Auto,
            modes: vec![],
            l: vec![],
            h: 1e-3,
            radius: 1.0,
            area: vec![PI],
            count: 10,
            output: PathBuf::from("out"),
        };
        match command {
            Command::Spectrum => cfg.t = vec![0.3],
            Command::Bounds | Command::Sweep => cfg.degree = 48,
            Command::EigenCurves => {
                cfg.t = linspace(0.0, 1.5, 16);
                cfg.beta = vec![0.1, 1.0, 5.0, 10.0];
                cfg.area = vec![PI, 4.0 * PI];
            }
            Command::ShapeDeriv => {
                cfg.family = vec![Family::Disk];
                cfg.t = linspace(-0.2, 0.2, 21);
                cfg.beta = vec![10.0];
                cfg.modes = vec![Mode { l: 2, v1: 1.0, v2: 0.0 }];
            }
            Command::SecondOrder => {
                cfg.family = vec![Family::Disk];
                cfg.beta = vec![0.0, 1.0, 10.0];
                cfg.l = vec![3, 4, 5];
                cfg.h = 1e-2;
                cfg.degree = 40;
            }
            Command::HarmonicsCheck => {}
        }
        cfg
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "command" => self.command = value.parse()?,
            "family" => self.family = items(value).map(str::parse).collect::<Result<_>>()?,
            "t" => self.t = parse_grid(key, value)?,
            "beta" => self.beta = parse_grid(key, value)?,
            "area" => self.area = parse_grid(key, value)?,
            "degree" => self.degree = parse_usize(key, value)?,
            "nodes" => self.nodes = parse_usize(key, value)?,
            "method" => self.method = value.parse()?,
            "count" => self.count = parse_usize(key, value)?,
            "h" => self.h = parse_f64(key, value)?,
            "radius" => self.radius = parse_f64(key, value)?,
            "modes" => self.modes = items(value).map(parse_mode).collect::<Result<_>>()?,
            "l" => {
                self.l = items(value)
                    .map(|s| s.parse().map_err(|e| config_err(key, format!("`{s}`: {e}"))))
                    .collect::<Result<_>>()?
            }
            "output" => {
                if value.is_empty() {
                    return Err(config_err(key, "empty path"));
                }
                self.output = PathBuf::from(value)
            }
            _ => return Err(config_err(key, format!("unknown key (expected one of {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err("line", format!("{}: expected `key = value`, got `{line}`", n + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (key, value) = kv.split_once('=').ok_or_else(|| config_err(kv, "override must be key=value"))?;
        self.set(key.trim(), value)
    }

    pub fn perturbation(&self) -> TrigSeries {
        let mut f = TrigSeries::default();
        for m in &self.modes {
            f = f.add(&TrigSeries::mode(m.l, m.v1, m.v2), 1.0);
        }
        f
    }

    pub fn validate(&self) -> Result<()> {
        let needs_grid = self.command != Command::HarmonicsCheck;
        if needs_grid {
            if self.beta.is_empty() {
                return Err(config_err("beta", "list is empty"));
            }
            if let Some(b) = self.beta.iter().find(|b| **b < 0.0) {
                return Err(config_err("beta", format!("{b} is negative")));
            }
            if self.degree < 8 {
                return Err(config_err("degree", format!("{} is below 8", self.degree)));
            }
            if self.nodes < 8 * self.degree {
                return Err(config_err("nodes", format!("{} is below 8·degree = {}", self.nodes, 8 * self.degree)));
            }
            if !(self.radius > 0.0) {
                return Err(config_err("radius", "must be positive"));
            }
        }
        match self.command {
            Command::Spectrum | Command::Bounds | Command::Sweep | Command::EigenCurves | Command::ShapeDeriv => {
                if self.family.is_empty() {
                    return Err(config_err("family", "list is empty"));
                }
                if self.t.is_empty() {
                    return Err(config_err("t", "grid is empty"));
                }
                if self.area.is_empty() {
                    return Err(config_err("area", "list is empty"));
                }
                if let Some(a) = self.area.iter().find(|a| !(**a > 0.0)) {
                    return Err(config_err("area", format!("{a} is not positive")));
                }
            }
            Command::SecondOrder => {
                if self.l.is_empty() {
                    return Err(config_err("l", "list is empty"));
                }
                if let Some(l) = self.l.iter().find(|l| **l < 3) {
                    return Err(config_err("l", format!("mode {l} is below 3")));
                }
                if !(self.h > 0.0) {
                    return Err(config_err("h", "must be positive"));
                }
            }
            Command::HarmonicsCheck => {}
        }
        match self.command {
            Command::Spectrum => {
                for (key, n) in [("family", self.family.len()), ("t", self.t.len()), ("beta", self.beta.len())] {
                    if n != 1 {
                        return Err(config_err(key, "spectrum takes a single value"));
                    }
                }
                if self.count == 0 {
                    return Err(config_err("count", "must be positive"));
                }
            }
            Command::ShapeDeriv => {
                if self.family != [Family::Disk] {
                    return Err(config_err("family", "shape-deriv perturbs the disk only"));
                }
                if self.modes.is_empty() {
                    return Err(config_err("modes", "list is empty"));
                }
                if !(self.h > 0.0) {
                    return Err(config_err("h", "must be positive"));
                }
            }
            Command::EigenCurves if self.family != [Family::Ellipse] => {
                return Err(config_err("family", "eigen-curves uses the ellipse family"));
            }
            _ => {}
        }
        if self.family.contains(&Family::Disk) && self.command != Command::SecondOrder && self.modes.iter().any(|m| m.l == 0) {
            return Err(config_err("modes", "mode l = 0 changes the radius; use `radius`"));
        }
        Ok(())
    }

    /// Defaults for `command`, then the file text, then overrides; validated.
    pub fn load(command: Command, text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut cfg = Self::defaults(command);
        if let Some(text) = text {
            cfg.apply_text(text)?;
        }
        for kv in overrides {
            cfg.apply_override(kv)?;
        }
        if cfg.command != command {
            return Err(config_err("command", format!("file is for `{}`, not `{command}`", cfg.command)));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_ranges_and_comments() {
        let text = "# sweep\nfamily = ellipse, star5\nt = 0:0.7:8  # grid\nbeta = 0.1, 1,10\narea = pi, 4pi\n";
        let cfg = ExperimentConfig::load(Command::Sweep, Some(text), &[]).unwrap();
        assert_eq!(cfg.family, vec![Family::Ellipse, Family::Star(5)]);
        assert_eq!(cfg.t.len(), 8);
        assert!((cfg.t[7] - 0.7).abs() < 1e-15);
        assert_eq!(cfg.beta, vec![0.1, 1.0, 10.0]);
        assert!((cfg.area[1] - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn empty_beta_names_key() {
        let err = ExperimentConfig::load(Command::Sweep, Some("beta ="), &[]).unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "beta"), "{err}");
        assert!(err.to_string().contains("beta"));
    }

    #[test]
    fn rejects_bad_values() {
        let cases = [
            ("degree = 4", "degree"),
            ("degree = 96", "nodes"),
            ("family = hexagon", "family"),
            ("t = 0:1", "t"),
            ("frobnicate = 1", "frobnicate"),
            ("beta = 1, x", "beta"),
            ("method = lanczos", "method"),
        ];
        for (text, key) in cases {
            let err = ExperimentConfig::load(Command::Spectrum, Some(text), &[]).unwrap_err();
            assert!(matches!(&err, Error::Config { key: k, .. } if k == key), "{text}: {err}");
        }
        let err = ExperimentConfig::load(Command::ShapeDeriv, None, &["modes=2:1".into()]).unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "modes"));
    }

    #[test]
    fn method_key() {
        assert_eq!(ExperimentConfig::defaults(Command::Sweep).method, MethodChoice::Auto);
        let cfg = ExperimentConfig::load(Command::Sweep, Some("method = nystrom"), &[]).unwrap();
        assert_eq!(cfg.method, MethodChoice::Nystrom);
    }

    #[test]
    fn overrides_apply_after_file() {
        let cfg = ExperimentConfig::load(Command::ShapeDeriv, Some("beta = 1"), &["beta=10".into(), "modes=3:1:0, 4:0:0.5".into()])
            .unwrap();
        assert_eq!(cfg.beta, vec![10.0]);
        let f = cfg.perturbation();
        assert_eq!(f.coeff(3), (1.0, 0.0));
        assert_eq!(f.coeff(4), (0.0, 0.5));
    }

    #[test]
    fn families_build_curves() {
        let cfg = ExperimentConfig::defaults(Command::Sweep);
        for fam in [Family::Ellipse, Family::Star(5)] {
            let c = fam.curve(0.4, &cfg).unwrap();
            assert!((c.area().unwrap() - PI).abs() < 1e-10);
        }
        assert_eq!("star17".parse::<Family>().unwrap(), Family::Star(17));
        assert!("star0".parse::<Family>().is_err());
    }
}
