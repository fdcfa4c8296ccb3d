use thiserror::Error;

use crate::collision::Finding;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("location and weight sequences differ in length ({locations} vs {weights})")]
    LengthMismatch { locations: usize, weights: usize },
    #[error("negative location {0}")]
    NegativeLocation(f64),
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("measure has no atoms of positive weight")]
    EmptyMeasure,
    #[error("total mass {mass} is outside 1 ± {tolerance}")]
    MassOutOfTolerance { mass: f64, tolerance: f64 },
    #[error("result would hold {atoms} atoms, over the hard cap of {cap}")]
    AtomOverflow { atoms: usize, cap: usize },
    #[error("probability {0} outside [0, 1]")]
    POutOfRange(f64),
    #[error("seminorm is infinite: mass or first moment differ ({detail})")]
    InfiniteSeminorm { detail: String },
    #[error("linear program failed: {0}")]
    LpFailure(String),
    #[error("initial measure is not in D: mass {mass}, first moment {m1}")]
    InvalidInitial { mass: f64, m1: f64 },
    #[error("step size {0} out of range")]
    StepOutOfRange(f64),
    #[error("decay fit window has {0} usable points, need at least 3")]
    WindowTooShort(usize),
    #[error("invalid collision model: {}", .0.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Finding>),
    #[error("index {0} is not in the support of the model's alpha sequence")]
    UnknownComponent(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
