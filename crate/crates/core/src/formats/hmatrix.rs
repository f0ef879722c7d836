use std::sync::Arc;

use nalgebra::DMatrix;

use super::Compression;
use crate::cluster::{BlockKind, BlockTree, ClusterTree};
use crate::kernel::{assemble_dense, lowrank_approx, Kernel};
use crate::linalg::frobenius;
use crate::par;
use crate::zfp::{compress, valr_compress, StoredMatrix};
use crate::{Error, Result};

/// Low-rank leaf `U Vᵀ`. When `sigma_in_u` is false the product is
/// `U · diag(σ) · Vᵀ` (the VALR layout where both factors are orthonormal).
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankPayload {
    pub u: StoredMatrix,
    pub v: StoredMatrix,
    pub sigma: Vec<f64>,
    pub sigma_in_u: bool,
}

impl LowRankPayload {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Decoded `(U·Σ, V)` regardless of the storage layout.
    pub fn factors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut u = self.u.to_dense();
        if !self.sigma_in_u {
            for (j, s) in self.sigma.iter().enumerate() {
                u.column_mut(j).scale_mut(*s);
            }
        }
        (u, self.v.to_dense())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (u, v) = self.factors();
        u * v.transpose()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HLeaf {
    Dense(StoredMatrix),
    LowRank(LowRankPayload),
}

impl HLeaf {
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            HLeaf::Dense(d) => d.to_dense(),
            HLeaf::LowRank(lr) => lr.to_dense(),
        }
    }
}

/// H-matrix: dense inadmissible leaves and low-rank admissible leaves,
/// all in permuted index order.
#[derive(Clone, Debug)]
pub struct HMatrix {
    pub(crate) tree: Arc<ClusterTree>,
    pub(crate) blocks: Arc<BlockTree>,
    pub(crate) leaves: Vec<HLeaf>,
    pub(crate) eps: f64,
    pub(crate) compression: Option<Compression>,
}

impl HMatrix {
    /// Assembles a container from existing parts, checking that every leaf
    /// payload matches its block.
    pub fn from_parts(tree: Arc<ClusterTree>, blocks: Arc<BlockTree>, leaves: Vec<HLeaf>, eps: f64, compression: Option<Compression>) -> Result<Self> {
        if leaves.len() != blocks.n_leaves() {
            return Err(Error::DimensionMismatch { expected: blocks.n_leaves(), actual: leaves.len() });
        }
        for (li, leaf) in leaves.iter().enumerate() {
            let b = blocks.leaf(li);
            let (m, n) = (tree.node(b.row).size(), tree.node(b.col).size());
            let ok = match (leaf, b.kind) {
                (HLeaf::Dense(d), BlockKind::Inadmissible) => d.nrows() == m && d.ncols() == n,
                (HLeaf::LowRank(lr), BlockKind::Admissible) => {
                    lr.u.nrows() == m && lr.v.nrows() == n && lr.u.ncols() == lr.rank() && lr.v.ncols() == lr.rank()
                }
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidPartition(format!("payload of leaf {li} does not match its block")));
            }
        }
        Ok(Self { tree, blocks, leaves, eps, compression })
    }

    pub fn tree(&self) -> &Arc<ClusterTree> {
        &self.tree
    }

    pub fn blocks(&self) -> &Arc<BlockTree> {
        &self.blocks
    }

    pub fn leaves(&self) -> &[HLeaf] {
        &self.leaves
    }

    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn compression(&self) -> Option<Compression> {
        self.compression
    }

    /// Total rank and count of the low-rank leaves.
    pub fn lowrank_stats(&self) -> (usize, usize) {
        self.leaves.iter().fold((0, 0), |(k, c), l| match l {
            HLeaf::LowRank(lr) => (k + lr.rank(), c + 1),
            HLeaf::Dense(_) => (k, c),
        })
    }

    /// Dense matrix in permuted order. Only sensible for small `n`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for (li, leaf) in self.leaves.iter().enumerate() {
            let b = self.blocks.leaf(li);
            let rows = &self.tree.node(b.row).range;
            let cols = &self.tree.node(b.col).range;
            out.view_mut((rows.start, cols.start), (rows.len(), cols.len())).copy_from(&leaf.to_dense());
        }
        out
    }

    /// Re-encodes every payload with `codec` at the matrix accuracy. Dense
    /// blocks are compressed directly; low-rank factors use VALR with
    /// `δ = ε‖Σ‖_F` when requested, direct compression of `U·Σ` and `V`
    /// otherwise.
    pub fn compress(&self, c: Compression, parallel: bool) -> Result<HMatrix> {
        let eps = self.eps;
        let leaves = par::map_indexed(parallel, self.leaves.len(), |li| compress_leaf(&self.leaves[li], eps, c));
        let leaves = leaves.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(HMatrix { tree: self.tree.clone(), blocks: self.blocks.clone(), leaves, eps, compression: Some(c) })
    }
}

fn compress_leaf(leaf: &HLeaf, eps: f64, c: Compression) -> Result<HLeaf> {
    Ok(match leaf {
        HLeaf::Dense(d) => {
            let dense = d.to_dense();
            HLeaf::Dense(StoredMatrix::whole(dense.nrows(), dense.ncols(), compress(dense.as_slice(), eps, c.codec)?)?)
        }
        HLeaf::LowRank(lr) if c.valr => {
            let mut w = lr.u.to_dense();
            if lr.sigma_in_u {
                for (j, s) in lr.sigma.iter().enumerate() {
                    w.column_mut(j).scale_mut(1.0 / s);
                }
            }
            let b = valr_compress(&w, &lr.v.to_dense(), &lr.sigma, eps * frobenius(&lr.sigma), c.codec)?;
            HLeaf::LowRank(LowRankPayload { u: b.w, v: b.x, sigma: b.sigma, sigma_in_u: false })
        }
        HLeaf::LowRank(lr) => {
            let (u, v) = lr.factors();
            HLeaf::LowRank(LowRankPayload {
                u: StoredMatrix::whole(u.nrows(), u.ncols(), compress(u.as_slice(), eps, c.codec)?)?,
                v: StoredMatrix::whole(v.nrows(), v.ncols(), compress(v.as_slice(), eps, c.codec)?)?,
                sigma: lr.sigma.clone(),
                sigma_in_u: true,
            })
        }
    })
}

/// Builds an H-matrix over `blocks`: inadmissible leaves are assembled,
/// admissible leaves approximated to relative accuracy `eps`.
pub fn build_hmatrix(kernel: &dyn Kernel, tree: Arc<ClusterTree>, blocks: Arc<BlockTree>, eps: f64, parallel: bool) -> Result<HMatrix> {
    if kernel.n() != tree.n() {
        return Err(Error::DimensionMismatch { expected: tree.n(), actual: kernel.n() });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let leaves = par::map_indexed(parallel, blocks.n_leaves(), |li| {
        let b = blocks.leaf(li);
        match b.kind {
            BlockKind::Admissible => {
                let lr = lowrank_approx(kernel, &tree, b.row, b.col, eps);
                HLeaf::LowRank(LowRankPayload {
                    u: StoredMatrix::plain(&lr.u()),
                    v: StoredMatrix::plain(&lr.x),
                    sigma: lr.sigma,
                    sigma_in_u: true,
                })
            }
            _ => HLeaf::Dense(StoredMatrix::plain(&assemble_dense(kernel, &tree, b.row, b.col).values)),
        }
    });
    Ok(HMatrix { tree, blocks, leaves, eps, compression: None })
}
