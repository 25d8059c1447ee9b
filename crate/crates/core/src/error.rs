use thiserror::Error;

use crate::arch::{TensorShape, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A conv or pooling window does not fit into its (padded) input.
    #[error("invalid geometry at layer {layer}: window of extent {extent} does not fit input {input} (padding {padding})")]
    InvalidGeometry {
        layer: usize,
        input: TensorShape,
        extent: u64,
        padding: u64,
    },

    #[error("invalid network:\n{0}")]
    InvalidNetwork(ValidationReport),

    /// The network does not have the layer layout an approach operates on.
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("candidate list is empty")]
    EmptyCandidateList,

    #[error("new resolution {new} is smaller than the original resolution {original}")]
    ResolutionDecrease { original: u64, new: u64 },

    #[error("invalid enumeration ranges: {0}")]
    InvalidRanges(String),
}
