//! Nested bases from shared bases.
//!
//! Every cluster `c` sees the basis groups `g_a = W_a Σ_a` of all its
//! ancestors `a` (and itself) restricted to its index range. Leaves take a
//! truncated basis of the stacked groups, each normalized to unit norm on
//! `c`. Inner clusters repeat this on the children's coefficient
//! representations, which yields the transfer matrices. Since the groups of
//! all ancestors are handled jointly, a child always represents its
//! parent's directions, including children whose own shared basis is empty.

use nalgebra::DMatrix;

use super::{BasisLeaf, ClusterBasis, H2Matrix, UniformHMatrix};
use crate::cluster::{ClusterId, ClusterTree};
use crate::linalg::column_basis;
use crate::par;
use crate::zfp::StoredMatrix;
use crate::{Error, Result};

/// Result of processing one cluster.
struct NodeOut {
    /// `W2_cᵀ W_a|_c` for every ancestor-or-self `a`, indexed by level.
    proj: Vec<DMatrix<f64>>,
    /// `‖W_a Σ_a|_c‖²` per level.
    mass: Vec<f64>,
    /// Finished bases of the subtree with their self projection.
    done: Vec<(ClusterId, ClusterBasis, DMatrix<f64>)>,
}

struct Source<'a> {
    tree: &'a ClusterTree,
    /// Shared bases, decoded.
    bases: &'a [ClusterBasis],
    tol: f64,
    parallel: bool,
}

fn rows_of(m: &StoredMatrix, start: usize, len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, m.ncols(), |i, j| m.get(start + i, j))
}

fn scaled(m: &DMatrix<f64>, sigma: &[f64], by: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, s) in sigma.iter().enumerate() {
        out.column_mut(j).scale_mut(s / by);
    }
    out
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

impl Source<'_> {
    fn process(&self, c: ClusterId) -> NodeOut {
        let node = self.tree.node(c);
        let path = self.tree.ancestors_and_self(c);
        if node.is_leaf() {
            return self.leaf(c, &path);
        }
        let outs: Vec<NodeOut> = if self.parallel && node.children.len() == 2 {
            let (a, b) = par::join(true, || self.process(node.children[0]), || self.process(node.children[1]));
            vec![a, b]
        } else {
            node.children.iter().map(|&ch| self.process(ch)).collect()
        };
        self.inner(c, &path, outs)
    }

    fn leaf(&self, c: ClusterId, path: &[ClusterId]) -> NodeOut {
        let node = self.tree.node(c);
        let mut restricted = Vec::with_capacity(path.len());
        let mut mass = Vec::with_capacity(path.len());
        let mut groups = Vec::new();
        for &a in path {
            let b = &self.bases[a];
            let w = b.explicit.as_ref().expect("shared bases are explicit");
            let wa = rows_of(w, node.range.start - self.tree.node(a).range.start, node.size());
            let g = scaled(&wa, &b.sigma, 1.0);
            let m2 = g.norm_squared();
            if m2 > 0.0 {
                groups.push(g / m2.sqrt());
            }
            mass.push(m2);
            restricted.push(wa);
        }
        let (w2, sigma) = column_basis(&hstack(node.size(), &groups), self.tol);
        let proj: Vec<DMatrix<f64>> = restricted.iter().map(|wa| w2.transpose() * wa).collect();
        let self_proj = proj.last().expect("path contains self").clone();
        let basis = ClusterBasis { rank: w2.ncols(), explicit: Some(StoredMatrix::plain(&w2)), transfer: Vec::new(), sigma };
        NodeOut { proj, mass, done: vec![(c, basis, self_proj)] }
    }

    fn inner(&self, c: ClusterId, path: &[ClusterId], outs: Vec<NodeOut>) -> NodeOut {
        let ranks: Vec<usize> = outs.iter().map(|o| o.proj[0].nrows()).collect();
        let total: usize = ranks.iter().sum();
        let mut mass = Vec::with_capacity(path.len());
        let mut groups = Vec::new();
        for (level, &a) in path.iter().enumerate() {
            let b = &self.bases[a];
            let m2: f64 = outs.iter().map(|o| o.mass[level]).sum();
            mass.push(m2);
            if m2 == 0.0 || b.rank == 0 {
                continue;
            }
            let mut g = DMatrix::zeros(total, b.rank);
            let mut at = 0;
            for o in &outs {
                let p = scaled(&o.proj[level], &b.sigma, m2.sqrt());
                g.view_mut((at, 0), (p.nrows(), b.rank)).copy_from(&p);
                at += p.nrows();
            }
            groups.push(g);
        }
        let (q, sigma) = column_basis(&hstack(total, &groups), self.tol);
        let k = q.ncols();
        let mut transfer = Vec::with_capacity(outs.len());
        let mut at = 0;
        for &r in &ranks {
            transfer.push(q.view((at, 0), (r, k)).into_owned());
            at += r;
        }
        let proj: Vec<DMatrix<f64>> = (0..path.len())
            .map(|level| {
                let ka = self.bases[path[level]].rank;
                let mut p = DMatrix::zeros(k, ka);
                for (o, e) in outs.iter().zip(&transfer) {
                    p += e.transpose() * &o.proj[level];
                }
                p
            })
            .collect();
        let self_proj = proj.last().expect("path contains self").clone();
        let mut done = Vec::new();
        for o in outs {
            done.extend(o.done);
        }
        let basis = ClusterBasis {
            rank: k,
            explicit: None,
            transfer: transfer.iter().map(StoredMatrix::plain).collect(),
            sigma,
        };
        done.push((c, basis, self_proj));
        NodeOut { proj, mass, done }
    }
}

/// Nested bases for `bases` with per-node truncation `tol`. Returns the
/// bases and `W2_cᵀ W_c` per cluster.
fn nest(tree: &ClusterTree, bases: &[ClusterBasis], tol: f64, parallel: bool) -> (Vec<ClusterBasis>, Vec<DMatrix<f64>>) {
    let src = Source { tree, bases, tol, parallel };
    let mut done = src.process(tree.root()).done;
    done.sort_by_key(|d| d.0);
    done.into_iter().map(|(_, b, p)| (b, p)).unzip()
}

/// Converts shared bases to nested bases. Couplings are projected,
/// `S' = (W2_τᵀ W_τ) S (X_σᵀ X2_σ)`.
pub fn build_h2(u: &UniformHMatrix, eps: f64, parallel: bool) -> Result<H2Matrix> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let tree = &u.tree;
    let ((rows, rproj), (cols, cproj)) =
        par::join(parallel, || nest(tree, &u.row_bases, eps, parallel), || nest(tree, &u.col_bases, eps, parallel));
    let leaves = par::map_indexed(parallel, u.leaves.len(), |li| match &u.leaves[li] {
        BasisLeaf::Dense(d) => BasisLeaf::Dense(d.clone()),
        BasisLeaf::Coupling(s) => {
            let b = u.blocks.leaf(li);
            BasisLeaf::Coupling(StoredMatrix::plain(&(&rproj[b.row] * s.to_dense() * cproj[b.col].transpose())))
        }
    });
    H2Matrix::from_parts(tree.clone(), u.blocks.clone(), rows, cols, leaves, eps, None)
}
