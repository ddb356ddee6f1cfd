use thiserror::Error;

use crate::linalg::SingularBasis;
use crate::lp_start::FarkasCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    SingularBasis(#[from] SingularBasis),

    /// The feasible set is empty; the certificate proves it.
    #[error("feasible set is empty")]
    Infeasible(FarkasCertificate),

    /// `M` restricted to the lineality space of `C` is singular, so no ray
    /// start exists at an implicit extreme point.
    #[error("matrix is not invertible on the lineality space (dim {lineality_dim})")]
    NotInvertibleOnLineality { lineality_dim: usize },

    #[error("covering vector vanished: the normal cone at the start point is a subspace")]
    DegenerateNormalCone,

    #[error("size cap exceeded: {0}")]
    SizeCapExceeded(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
