use thiserror::Error;

use crate::hilbert::{BellKind, Frame};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The formal sum maps to the zero tensor, i.e. it lies in the relation
    /// subspace.
    #[error("formal sum lies in the relation subspace (quotient image is zero)")]
    InRelationSubspace,

    /// The local formal sum cancels to the zero vector, so there is no
    /// definite outcome.
    #[error("destructive interference: local sum has zero norm")]
    DestructiveInterference,

    #[error(
        "no mixed-frame lift for {kind}: not an eigenvector of sigma_{frame_a} (x) sigma_{frame_b} (witness: {witness:?})"
    )]
    NoGo {
        kind: BellKind,
        frame_a: Frame,
        frame_b: Frame,
        witness: Option<f64>,
    },

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("protocol error: missing required field `{0}`")]
    MissingField(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
