//! Matrix entries of the model problem and low-rank approximation of
//! admissible blocks.

mod aca;
mod slp;

use std::ops::Range;

use nalgebra::DMatrix;

use crate::cluster::{ClusterId, ClusterTree};

pub use aca::{aca_partial_pivoting, lowrank_approx, lowrank_from_dense, LowRankBlock, ACA_SAFETY};
pub use slp::{slp_entry, SlpKernel, REGULARIZATION};

/// Entry generator over original (unpermuted) indices.
pub trait Kernel: Sync {
    fn n(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> f64;

    /// Column-major block `rows × cols`.
    fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.entry(rows[a], cols[b]))
    }

    /// The full `n × n` matrix in original index order.
    fn full(&self) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.n()).collect();
        self.block(&idx, &idx)
    }
}

/// Dense sub-block in permuted index ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseBlock {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub values: DMatrix<f64>,
}

pub fn assemble_dense(kernel: &dyn Kernel, tree: &ClusterTree, t: ClusterId, s: ClusterId) -> DenseBlock {
    let rows = tree.node(t).range.clone();
    let cols = tree.node(s).range.clone();
    let values = kernel.block(&tree.perm()[rows.clone()], &tree.perm()[cols.clone()]);
    DenseBlock { rows, cols, values }
}

/// The full matrix in permuted order.
pub fn permuted_full(kernel: &dyn Kernel, tree: &ClusterTree) -> DMatrix<f64> {
    kernel.block(tree.perm(), tree.perm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{build_cluster_tree, make_sphere_geometry};

    #[test]
    fn blocks_are_submatrices() {
        let g = make_sphere_geometry(2).unwrap();
        let k = SlpKernel::new(&g);
        let tree = build_cluster_tree(&g, 16).unwrap();
        let full = permuted_full(&k, &tree);
        for t in [0, 1, 3, 6] {
            for s in [0, 2, 5] {
                let b = assemble_dense(&k, &tree, t, s);
                for (a, i) in b.rows.clone().enumerate() {
                    for (c, j) in b.cols.clone().enumerate() {
                        assert_eq!(b.values[(a, c)], full[(i, j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn root_leaf_block_is_full_matrix() {
        let g = make_sphere_geometry(0).unwrap();
        let k = SlpKernel::new(&g);
        let tree = build_cluster_tree(&g, 32).unwrap();
        let b = assemble_dense(&k, &tree, 0, 0);
        assert_eq!(b.values, permuted_full(&k, &tree));
        let one = Kernel::block(&k, &[3], &[7]);
        assert_eq!(one[(0, 0)], slp_entry(&g, 3, 7));
    }
}
