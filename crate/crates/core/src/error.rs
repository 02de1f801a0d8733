use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong while building or evaluating a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A physical parameter violates its admissible range.
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    /// A tuning parameter lies outside its topology-specific domain.
    OutOfDomain { name: &'static str, value: f64, lower: f64, upper: f64 },
    /// The operating frequency must be strictly positive.
    NonPositiveFrequency(f64),
    /// The flipping system `[1 1; γ -1]` is singular (γ = -1).
    SingularFlipSystem,
    /// Curve handed to a bandwidth or peak search is empty or has no positive peak.
    DegenerateCurve(&'static str),
    /// Grids must be non-empty and sufficiently resolved.
    InvalidGrid(&'static str),
    /// A time-domain trace did not reach steady state.
    NotConverged { cycles: usize },
    /// Option combination the simulator does not support.
    Unsupported(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value, reason } => {
                write!(f, "invalid {name} = {value}: {reason}")
            }
            Error::OutOfDomain { name, value, lower, upper } => {
                write!(f, "{name} = {value} outside [{lower}, {upper}]")
            }
            Error::NonPositiveFrequency(w) => write!(f, "frequency must be positive, got {w}"),
            Error::SingularFlipSystem => f.write_str("flipping factor gamma = -1 makes the flip system singular"),
            Error::DegenerateCurve(what) => write!(f, "degenerate curve: {what}"),
            Error::InvalidGrid(what) => write!(f, "invalid grid: {what}"),
            Error::NotConverged { cycles } => {
                write!(f, "simulation did not converge after {cycles} cycles")
            }
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
        }
    }
}

impl core::error::Error for Error {}
