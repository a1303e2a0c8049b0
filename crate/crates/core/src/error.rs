use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("node count {0} must be even and at least 8")]
    BadNodeCount(usize),
    #[error("polar radius must stay positive (min {0:.3e})")]
    NonPositiveRadius(f64),
    #[error("curve is not simple: {0}")]
    SelfIntersecting(String),
    #[error("domain is not star-shaped about its boundary centroid")]
    NotStarShaped,
    #[error("mass matrix is numerically rank zero")]
    RankZero,
    #[error("requested {requested} eigenvalues but only {available} are resolved")]
    TooManyEigenvalues { requested: usize, available: usize },
    #[error("index {index} out of range ({len} available)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("eigenvalue group is not degenerate (relative spread {0:.3e})")]
    NotDegenerate(f64),
    #[error("eigenfunctions are not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("mode l={0} is excluded (index set omits 0 and 2)")]
    ExcludedMode(i64),
    #[error("bound chain violated: {0}")]
    ChainViolated(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("Richardson extrapolation did not settle (|D(h)-D(h/2)| = {0:.3e})")]
    NoConvergence(f64),
    #[error("invalid harmonic index l={l}, m={m}")]
    BadHarmonic { l: i64, m: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
