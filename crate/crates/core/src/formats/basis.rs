use std::marker::PhantomData;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Compression, HLeaf, HMatrix};
use crate::cluster::{BlockKind, BlockTree, ClusterId, ClusterTree};
use crate::linalg::{column_basis, frobenius};
use crate::par;
use crate::zfp::{compress, valr_compress_basis, Codec, StoredMatrix};
use crate::{Error, Result};

/// Orthonormal basis of one cluster. Explicit bases are `|τ| × k`; nested
/// inner bases instead hold one `k_child × k` transfer matrix per child.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterBasis {
    pub rank: usize,
    pub explicit: Option<StoredMatrix>,
    pub transfer: Vec<StoredMatrix>,
    /// Singular values retained from the basis construction.
    pub sigma: Vec<f64>,
}

impl ClusterBasis {
    pub fn empty(size: usize) -> Self {
        Self { rank: 0, explicit: Some(StoredMatrix::zeros(size, 0)), transfer: Vec::new(), sigma: Vec::new() }
    }

    fn compressed(&self, eps: f64, c: Compression) -> Result<Self> {
        let explicit = match &self.explicit {
            Some(w) if c.valr => Some(valr_compress_basis(&w.to_dense(), Some(&self.sigma), eps, c.codec)?),
            Some(w) => Some(direct(w, eps, c.codec)?),
            None => None,
        };
        let transfer = self.transfer.iter().map(|e| direct(e, eps, c.codec)).collect::<Result<Vec<_>>>()?;
        Ok(Self { rank: self.rank, explicit, transfer, sigma: self.sigma.clone() })
    }
}

pub(crate) fn direct(m: &StoredMatrix, eps: f64, codec: Codec) -> Result<StoredMatrix> {
    let d = m.to_dense();
    StoredMatrix::whole(d.nrows(), d.ncols(), compress(d.as_slice(), eps, codec)?)
}

/// Leaf payload of a shared-basis matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisLeaf {
    Dense(StoredMatrix),
    /// `k_τ × k_σ` coupling, the block is `W_τ S X_σᵀ`.
    Coupling(StoredMatrix),
}

/// Marker for explicit bases at every cluster.
#[derive(Clone, Copy, Debug)]
pub struct Uniform;

/// Marker for nested bases: explicit at leaves, transfer matrices above.
#[derive(Clone, Copy, Debug)]
pub struct Nested;

pub trait BasisKind: Send + Sync + 'static {
    const NESTED: bool;
}

impl BasisKind for Uniform {
    const NESTED: bool = false;
}

impl BasisKind for Nested {
    const NESTED: bool = true;
}

/// Matrix with cluster bases shared per block row and column.
#[derive(Clone, Debug)]
pub struct BasisMatrix<K> {
    pub(crate) tree: Arc<ClusterTree>,
    pub(crate) blocks: Arc<BlockTree>,
    pub(crate) row_bases: Vec<ClusterBasis>,
    pub(crate) col_bases: Vec<ClusterBasis>,
    pub(crate) leaves: Vec<BasisLeaf>,
    pub(crate) eps: f64,
    pub(crate) compression: Option<Compression>,
    pub(crate) kind: PhantomData<K>,
}

pub type UniformHMatrix = BasisMatrix<Uniform>;
pub type H2Matrix = BasisMatrix<Nested>;

impl<K: BasisKind> BasisMatrix<K> {
    /// Assembles a container from parts, checking basis kinds and coupling
    /// dimensions.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        tree: Arc<ClusterTree>,
        blocks: Arc<BlockTree>,
        row_bases: Vec<ClusterBasis>,
        col_bases: Vec<ClusterBasis>,
        leaves: Vec<BasisLeaf>,
        eps: f64,
        compression: Option<Compression>,
    ) -> Result<Self> {
        for bases in [&row_bases, &col_bases] {
            if bases.len() != tree.len() {
                return Err(Error::DimensionMismatch { expected: tree.len(), actual: bases.len() });
            }
            for (c, b) in bases.iter().enumerate() {
                let node = tree.node(c);
                let explicit_expected = !K::NESTED || node.is_leaf();
                let ok = match &b.explicit {
                    Some(w) => explicit_expected && w.nrows() == node.size() && w.ncols() == b.rank && b.transfer.is_empty(),
                    None => {
                        !explicit_expected
                            && b.transfer.len() == node.children.len()
                            && b.transfer.iter().zip(&node.children).all(|(e, &ch)| e.ncols() == b.rank && e.nrows() == bases[ch].rank)
                    }
                };
                if !ok {
                    return Err(Error::InvalidPartition(format!("cluster basis {c} is inconsistent")));
                }
            }
        }
        if leaves.len() != blocks.n_leaves() {
            return Err(Error::DimensionMismatch { expected: blocks.n_leaves(), actual: leaves.len() });
        }
        for (li, leaf) in leaves.iter().enumerate() {
            let b = blocks.leaf(li);
            let ok = match (leaf, b.kind) {
                (BasisLeaf::Dense(d), BlockKind::Inadmissible) => d.nrows() == tree.node(b.row).size() && d.ncols() == tree.node(b.col).size(),
                (BasisLeaf::Coupling(s), BlockKind::Admissible) => s.nrows() == row_bases[b.row].rank && s.ncols() == col_bases[b.col].rank,
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidPartition(format!("payload of leaf {li} does not match its block")));
            }
        }
        Ok(Self { tree, blocks, row_bases, col_bases, leaves, eps, compression, kind: PhantomData })
    }

    pub fn tree(&self) -> &Arc<ClusterTree> {
        &self.tree
    }

    pub fn blocks(&self) -> &Arc<BlockTree> {
        &self.blocks
    }

    pub fn row_bases(&self) -> &[ClusterBasis] {
        &self.row_bases
    }

    pub fn col_bases(&self) -> &[ClusterBasis] {
        &self.col_bases
    }

    pub fn leaves(&self) -> &[BasisLeaf] {
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

    pub fn is_nested(&self) -> bool {
        K::NESTED
    }

    /// Explicit row basis of cluster `c`, expanded through transfer
    /// matrices for nested bases.
    pub fn row_basis(&self, c: ClusterId) -> DMatrix<f64> {
        expand_basis(&self.tree, &self.row_bases, c)
    }

    pub fn col_basis(&self, c: ClusterId) -> DMatrix<f64> {
        expand_basis(&self.tree, &self.col_bases, c)
    }

    /// Reconstructed leaf block `li`.
    pub fn block(&self, li: usize) -> DMatrix<f64> {
        let b = self.blocks.leaf(li);
        match &self.leaves[li] {
            BasisLeaf::Dense(d) => d.to_dense(),
            BasisLeaf::Coupling(s) => self.row_basis(b.row) * s.to_dense() * self.col_basis(b.col).transpose(),
        }
    }

    /// Dense matrix in permuted order. Only sensible for small `n`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for li in 0..self.leaves.len() {
            let b = self.blocks.leaf(li);
            let rows = &self.tree.node(b.row).range;
            let cols = &self.tree.node(b.col).range;
            out.view_mut((rows.start, cols.start), (rows.len(), cols.len())).copy_from(&self.block(li));
        }
        out
    }

    /// Re-encodes every payload with `codec` at the matrix accuracy. Dense
    /// blocks, couplings and transfer matrices are compressed directly;
    /// explicit bases use VALR with `δ = ε` when requested.
    pub fn compress(&self, c: Compression, parallel: bool) -> Result<Self> {
        let eps = self.eps;
        let compress_bases = |bases: &[ClusterBasis]| {
            par::map_indexed(parallel, bases.len(), |i| bases[i].compressed(eps, c)).into_iter().collect::<Result<Vec<_>>>()
        };
        let row_bases = compress_bases(&self.row_bases)?;
        let col_bases = compress_bases(&self.col_bases)?;
        let leaves = par::map_indexed(parallel, self.leaves.len(), |li| {
            Ok(match &self.leaves[li] {
                BasisLeaf::Dense(d) => BasisLeaf::Dense(direct(d, eps, c.codec)?),
                BasisLeaf::Coupling(s) => BasisLeaf::Coupling(direct(s, eps, c.codec)?),
            })
        });
        let leaves = leaves.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tree: self.tree.clone(),
            blocks: self.blocks.clone(),
            row_bases,
            col_bases,
            leaves,
            eps,
            compression: Some(c),
            kind: PhantomData,
        })
    }
}

/// Explicit basis of `c`, recursively expanded through transfer matrices.
pub fn expand_basis(tree: &ClusterTree, bases: &[ClusterBasis], c: ClusterId) -> DMatrix<f64> {
    let b = &bases[c];
    if let Some(w) = &b.explicit {
        return w.to_dense();
    }
    let node = tree.node(c);
    let mut out = DMatrix::zeros(node.size(), b.rank);
    for (&ch, e) in node.children.iter().zip(&b.transfer) {
        let r = &tree.node(ch).range;
        let part = expand_basis(tree, bases, ch) * e.to_dense();
        out.view_mut((r.start - node.range.start, 0), (r.len(), b.rank)).copy_from(&part);
    }
    out
}

/// Which factor of the low-rank leaves spans a basis.
#[derive(Clone, Copy)]
enum Side {
    Row,
    Col,
}

/// `σ`-scaled factor `W Σ` (rows) or `X Σ` (columns) of a low-rank leaf,
/// normalized to unit Frobenius norm.
fn scaled_factor(leaf: &HLeaf, side: Side) -> Option<DMatrix<f64>> {
    let HLeaf::LowRank(lr) = leaf else { return None };
    let norm = frobenius(&lr.sigma);
    if norm == 0.0 {
        return None;
    }
    let (u, v) = lr.factors();
    let mut g = match side {
        Side::Row => u,
        Side::Col => {
            let mut v = v;
            for (j, s) in lr.sigma.iter().enumerate() {
                v.column_mut(j).scale_mut(*s);
            }
            v
        }
    };
    g /= norm;
    Some(g)
}

fn hstack(rows: usize, parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((0, at), (rows, p.ncols())).copy_from(p);
        at += p.ncols();
    }
    out
}

fn uniform_bases(h: &HMatrix, side: Side, eps: f64, parallel: bool) -> Vec<(DMatrix<f64>, Vec<f64>)> {
    let tree = &h.tree;
    par::map_indexed(parallel, tree.len(), |c| {
        let list = match side {
            Side::Row => h.blocks.row_list(c),
            Side::Col => h.blocks.col_list(c),
        };
        let parts: Vec<DMatrix<f64>> = list.iter().filter_map(|&li| scaled_factor(&h.leaves[li], side)).collect();
        column_basis(&hstack(tree.node(c).size(), &parts), eps)
    })
}

/// Builds shared cluster bases from the low-rank leaves of `h`: per block
/// row the normalized factors `U_{τ,σ} Σ / ‖Σ‖_F` are stacked and truncated
/// at `eps`; couplings are the projections `W_τᵀ (U Vᵀ) X_σ`.
pub fn build_uniform(h: &HMatrix, eps: f64, parallel: bool) -> Result<UniformHMatrix> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let (rows, cols) = par::join(parallel, || uniform_bases(h, Side::Row, eps, parallel), || uniform_bases(h, Side::Col, eps, parallel));
    let leaves = par::map_indexed(parallel, h.leaves.len(), |li| match &h.leaves[li] {
        HLeaf::Dense(d) => BasisLeaf::Dense(StoredMatrix::plain(&d.to_dense())),
        HLeaf::LowRank(lr) => {
            let b = h.blocks.leaf(li);
            let (u, v) = lr.factors();
            let s = (rows[b.row].0.transpose() * u) * (v.transpose() * &cols[b.col].0);
            BasisLeaf::Coupling(StoredMatrix::plain(&s))
        }
    });
    let to_basis = |v: Vec<(DMatrix<f64>, Vec<f64>)>| {
        v.into_iter()
            .map(|(w, sigma)| ClusterBasis { rank: w.ncols(), explicit: Some(StoredMatrix::plain(&w)), transfer: Vec::new(), sigma })
            .collect()
    };
    UniformHMatrix::from_parts(h.tree.clone(), h.blocks.clone(), to_basis(rows), to_basis(cols), leaves, eps, None)
}
