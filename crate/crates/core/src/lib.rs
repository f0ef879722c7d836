//! Hierarchical matrices (H, uniform-H, H²) over a boundary-element model
//! problem, with error-adaptive floating-point storage (AFLP, FPX, VALR) and
//! a family of sequential and task-parallel matrix-vector products.
//!
//! All matrix and vector data lives in the permuted index order of the
//! cluster tree. [`cluster::ClusterTree::to_permuted`] and
//! [`cluster::ClusterTree::from_permuted`] convert at the boundary.
//!
//! The `parallel` feature (on by default) backs the fork-join recursion with
//! rayon. Without it every parallel entry point runs sequentially on the
//! calling thread and produces the same results.

mod bytes;
pub mod cluster;
pub mod error;
pub mod formats;
pub mod kernel;
pub mod linalg;
pub mod mvm;
pub mod par;
pub mod zfp;

pub use error::{Error, Result};
