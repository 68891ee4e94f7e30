//! Crate-wide error type.
//!
//! Exit-code mapping for the CLI: usage errors → 1, data errors → 2,
//! numerical failures → 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (bad sigma, even kernel
    /// size, tau out of range, ...).
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    /// Operands have incompatible shapes.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Problem with input data (missing files, empty dataset, corrupt PNG,
    /// checkpoint/family mismatch).
    #[error("data error: {0}")]
    Data(String),

    /// NaN or non-finite value detected where finite numbers are required.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("png decode error: {0}")]
    PngDecode(#[from] png::DecodingError),

    #[error("png encode error: {0}")]
    PngEncode(#[from] png::EncodingError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArg(_) | Error::ShapeMismatch(_) => 1,
            Error::Data(_) | Error::Io(_) | Error::PngDecode(_) | Error::PngEncode(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArg(msg.into())
}

pub(crate) fn shape_mismatch(msg: impl Into<String>) -> Error {
    Error::ShapeMismatch(msg.into())
}
