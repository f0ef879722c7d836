//! Matrix-vector products `y := α·M·x + y` for all container formats.
//!
//! Vectors are in the permuted index order of the cluster tree. Every
//! routine reads compressed payloads directly, decoding values on the fly.
//!
//! | routine                | scheme                                          |
//! |------------------------|-------------------------------------------------|
//! | [`hmvm_seq`]           | sequential loop over leaf blocks                |
//! | [`hmvm_chunks`]        | parallel over blocks, locked leaf-cluster chunks|
//! | [`hmvm_cluster_lists`] | block rows root to leaves, deterministic        |
//! | [`hmvm_thread_local`]  | per-worker accumulators, reduced at the end     |
//! | [`hmvm_adjoint`]       | `Mᵀ x` over block columns                       |
//! | [`uni_mvm`]            | shared bases, block rows root to leaves         |
//! | [`uni_mvm_mutex`]      | shared bases, locked coupling accumulation      |
//! | [`h2_mvm`]             | nested bases with backward transformation       |
//! | [`h2_mvm_mutex`]       | nested bases, locked coupling accumulation      |

mod h;
mod shared;
mod variant;
mod work;

pub use h::{hmvm_adjoint, hmvm_chunks, hmvm_cluster_lists, hmvm_seq, hmvm_thread_local};
pub use shared::{h2_forward, h2_mvm, h2_mvm_mutex, uni_forward, uni_mvm, uni_mvm_mutex, CoeffStore};
pub use variant::Variant;
pub use work::{MvmCost, Work};

use crate::cluster::{ClusterId, ClusterTree};
use crate::zfp::StoredMatrix;
use crate::{Error, Result};

/// `y += α·D·x` for a possibly compressed dense block, column by column.
/// FPX columns are decoded in strips of [`crate::zfp::STRIP`] values.
#[inline]
pub fn zmvm_dense(d: &StoredMatrix, alpha: f64, x: &[f64], y: &mut [f64]) {
    d.gemv(alpha, x, y);
}

/// Like [`zmvm_dense`] but decoding FPX values one at a time.
pub fn zmvm_dense_scalar(d: &StoredMatrix, alpha: f64, x: &[f64], y: &mut [f64]) {
    d.gemv_scalar(alpha, x, y);
}

fn check_dims(n: usize, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    Ok(())
}

/// Splits the slice of cluster `c` into the slices of its children.
fn split_children<'a>(tree: &ClusterTree, c: ClusterId, mut y: &'a mut [f64]) -> Vec<(ClusterId, &'a mut [f64])> {
    let node = tree.node(c);
    let mut out = Vec::with_capacity(node.children.len());
    for &ch in &node.children {
        let (head, tail) = std::mem::take(&mut y).split_at_mut(tree.node(ch).size());
        out.push((ch, head));
        y = tail;
    }
    debug_assert!(node.children.is_empty() || y.is_empty());
    out
}

/// Splits `y` into the slices of all leaf clusters, in leaf order.
fn split_leaves<'a>(tree: &ClusterTree, mut y: &'a mut [f64]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(tree.leaves().len());
    for &l in tree.leaves() {
        let (head, tail) = std::mem::take(&mut y).split_at_mut(tree.node(l).size());
        out.push(head);
        y = tail;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block_is_exact_for_all_codecs() {
        use crate::zfp::{compress, Codec};
        let id = nalgebra::DMatrix::<f64>::identity(7, 7);
        let x: Vec<f64> = (0..7).map(|i| 0.5 + i as f64).collect();
        for codec in [Codec::Aflp, Codec::Fpx] {
            for eps in [1e-1, 1e-4, 1e-9] {
                let d = StoredMatrix::whole(7, 7, compress(id.as_slice(), eps, codec).unwrap()).unwrap();
                let mut y = vec![0.0; 7];
                zmvm_dense(&d, 2.0, &x, &mut y);
                for i in 0..7 {
                    assert_eq!(y[i], 2.0 * x[i]);
                }
            }
        }
    }

    #[test]
    fn blocked_and_scalar_fpx_agree_bitwise() {
        use crate::zfp::{compress, Codec};
        let a = nalgebra::DMatrix::from_fn(150, 13, |i, j| ((i * 7 + j * 3) as f64).sin() * 10f64.powi((i % 5) as i32 - 2));
        let x: Vec<f64> = (0..13).map(|j| (j as f64).cos()).collect();
        for eps in [1e-2, 1e-6, 1e-12] {
            let d = StoredMatrix::whole(150, 13, compress(a.as_slice(), eps, Codec::Fpx).unwrap()).unwrap();
            let mut y1 = vec![0.25; 150];
            let mut y2 = y1.clone();
            zmvm_dense(&d, -1.5, &x, &mut y1);
            zmvm_dense_scalar(&d, -1.5, &x, &mut y2);
            assert!(y1.iter().zip(&y2).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
