use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label `{0}` appears on both operands")]
    LabelCollision(String),

    #[error("label error: {0}")]
    LabelError(String),

    #[error("shape error: {0}")]
    ShapeError(String),

    #[error("operator is not Hermitian (max |A - A^H| = {residual:e})")]
    HermiticityError { residual: f64 },

    #[error("numerical error: {0}")]
    NumericalError(String),

    #[error("cannot normalize a zero-norm state")]
    ZeroNorm,

    #[error("invalid payload: {0}")]
    InvalidPayload(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("infeasible x = {x}: P5 needs x >= x_min = {x_min}")]
    InfeasibleX { x: f64, x_min: f64 },

    #[error("x = {0} is outside the admissible range (x <= 4)")]
    XOutOfRange(f64),

    #[error("POVM outcome {0} has no correction (inconclusive or out of range)")]
    NotApplicable(u8),

    #[error("no branch plan found for {0}")]
    DerivationFailure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
