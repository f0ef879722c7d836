//! Index-set geometry, cluster trees and block trees.

mod admissibility;
mod block;
mod geometry;
mod tree;

pub use admissibility::{admissible_standard, admissible_weak, Admissibility, StandardAdmissibility, WeakAdmissibility};
pub use block::{build_block_tree, BlockId, BlockKind, BlockNode, BlockTree};
pub use geometry::{make_sphere_geometry, Geometry, MAX_REFINEMENT};
pub use tree::{build_cluster_tree, flat_clustering, BBox, ClusterId, ClusterNode, ClusterTree};

/// Default leaf size of cluster trees.
pub const DEFAULT_N_MIN: usize = 32;

/// Default constant of the standard admissibility condition.
pub const DEFAULT_ETA: f64 = 2.0;
