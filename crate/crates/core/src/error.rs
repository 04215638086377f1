use std::fmt;

use thiserror::Error;

/// A single violated parameter constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidParameter {
    pub name: &'static str,
    pub value: f64,
    pub constraint: &'static str,
}

impl fmt::Display for InvalidParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} violates `{}`", self.name, self.value, self.constraint)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join(.0))]
    InvalidParameters(Vec<InvalidParameter>),

    #[error("non-finite value while evaluating {0}")]
    Evaluation(&'static str),

    #[error("argument outside the Gamma mgf domain: Re(1 - scale*s) = {0}")]
    OutsideMgfDomain(f64),

    #[error("characteristic function is not Hermitian at u = {0}")]
    NonHermitianCf(f64),

    #[error("frequency grid too coarse: density integrates to {mass}")]
    GridTooCoarse { mass: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("value {0} outside the admissible range {1}")]
    OutOfRange(f64, &'static str),

    #[error("expected frequency of class {0} is zero")]
    ZeroExpectedFrequency(usize),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("series too short: {len} observations, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[InvalidParameter]) -> String {
    v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
