use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible for `op`.
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// Axis index outside the tensor rank.
    Axis { axis: usize, rank: usize },
    /// An operation produced NaN or infinity.
    NonFinite { op: &'static str },
    /// Invalid configuration (window too short, bad overlap, ratio, ...).
    Config(String),
    /// Invalid argument value (label out of range, too few samples, ...).
    Value(String),
    /// Operation called in the wrong state (backward before forward).
    State(&'static str),
    /// Malformed serialized data.
    Format(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, left, right } => {
                write!(f, "{op}: incompatible shapes {left:?} and {right:?}")
            }
            Error::Axis { axis, rank } => write!(f, "axis {axis} out of range for rank {rank}"),
            Error::NonFinite { op } => write!(f, "{op}: non-finite value produced"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Value(msg) => write!(f, "value error: {msg}"),
            Error::State(msg) => write!(f, "state error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
