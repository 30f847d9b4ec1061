use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size n = {0} must be a power of two (>= 4)")]
    GridSize(usize),

    #[error("period must be finite and positive, got {0}")]
    Period(f64),

    #[error("expected {expected} values for an {n}x{n} grid, got {got}")]
    Length { n: usize, expected: usize, got: usize },

    #[error("non-finite value {value} at grid node (i = {i}, j = {j})")]
    NonFinite { i: usize, j: usize, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("fractional order s = {0} outside [-1, 3]")]
    FractionalOrder(f64),

    #[error("negative order s = {s} is undefined on constants (field mean = {mean:e})")]
    NonZeroMean { s: f64, mean: f64 },

    #[error("offset y = ({0}, {1}) has zero length")]
    ZeroOffset(f64, f64),

    #[error("Besov smoothness s = {0} outside (0, 2)")]
    BesovOrder(f64),

    #[error("Lebesgue exponent {name} = {value} outside [1, inf]")]
    Exponent { name: &'static str, value: f64 },

    #[error("parameter `{name}`: {msg}")]
    InvalidParameter { name: &'static str, msg: String },

    #[error("invalid quadrature: {0}")]
    Quadrature(String),

    #[error("non-finite integrand at x = ({x1:.6}, {x2:.6}), y = ({y1:.6}, {y2:.6})")]
    NonFiniteIntegrand { x1: f64, x2: f64, y1: f64, y2: f64 },

    #[error("kernel factor bound violated: {0}")]
    KernelBound(String),

    #[error("need at least {need} ledger reports, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("simulation aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("profile parameter `{name}`: {msg}")]
    ProfileParam { name: &'static str, msg: String },

    #[error("ledger parse error: {0}")]
    LedgerParse(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    #[cfg(feature = "cli")]
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
