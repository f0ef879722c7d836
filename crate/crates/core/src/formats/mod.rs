//! Hierarchical matrix containers: H-matrices with independent low-rank
//! blocks, uniform H-matrices with shared cluster bases and H²-matrices
//! with nested bases, plus memory accounting and container files.

mod basis;
mod hmatrix;
mod io;
mod memory;
mod nested;

pub use basis::{build_uniform, expand_basis, BasisKind, BasisLeaf, BasisMatrix, ClusterBasis, H2Matrix, Nested, Uniform, UniformHMatrix};
pub use hmatrix::{build_hmatrix, HLeaf, HMatrix, LowRankPayload};
pub use io::AnyMatrix;
pub use memory::{compression_ratio, memory_footprint, Footprint, MemoryBreakdown, BLOCK_NODE_BYTES, CLUSTER_NODE_BYTES};
pub use nested::build_h2;

use crate::zfp::Codec;

/// Storage scheme applied to a finished matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Compression {
    pub codec: Codec,
    /// Variable per-column accuracy for low-rank factors and explicit bases.
    pub valr: bool,
}
