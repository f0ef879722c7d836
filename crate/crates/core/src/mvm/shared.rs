use std::sync::{Mutex, OnceLock};

use super::{check_dims, split_children, zmvm_dense};
use crate::cluster::{ClusterId, ClusterTree};
use crate::formats::{BasisKind, BasisLeaf, BasisMatrix, ClusterBasis, H2Matrix, UniformHMatrix};
use crate::par;
use crate::Result;

/// Per-cluster coefficient vectors, `s_σ` after a forward transformation.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffStore {
    coeffs: Vec<Vec<f64>>,
}

impl CoeffStore {
    pub fn get(&self, c: ClusterId) -> &[f64] {
        &self.coeffs[c]
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// `s_σ = X_σᵀ x|_σ` for every cluster with an explicit basis; clusters
/// are independent.
pub fn uni_forward(tree: &ClusterTree, bases: &[ClusterBasis], x: &[f64], parallel: bool) -> CoeffStore {
    let coeffs = par::map_indexed(parallel, tree.len(), |c| {
        let b = &bases[c];
        let mut s = vec![0.0; b.rank];
        if let Some(w) = &b.explicit {
            if b.rank > 0 {
                w.gemv_t(1.0, &x[tree.node(c).range.clone()], &mut s);
            }
        }
        s
    });
    CoeffStore { coeffs }
}

fn nested_forward(tree: &ClusterTree, bases: &[ClusterBasis], x: &[f64], c: ClusterId, out: &[OnceLock<Vec<f64>>], parallel: bool) {
    let node = tree.node(c);
    let b = &bases[c];
    let mut s = vec![0.0; b.rank];
    if node.is_leaf() {
        if let Some(w) = b.explicit.as_ref().filter(|_| b.rank > 0) {
            w.gemv_t(1.0, &x[node.range.clone()], &mut s);
        }
    } else {
        par::for_each(parallel, node.children.clone(), |ch| nested_forward(tree, bases, x, ch, out, parallel));
        for (&ch, e) in node.children.iter().zip(&b.transfer) {
            let sc = out[ch].get().expect("child coefficients computed first");
            if b.rank > 0 && !sc.is_empty() {
                e.gemv_t(1.0, sc, &mut s);
            }
        }
    }
    out[c].set(s).expect("each cluster is visited once");
}

/// Nested forward transformation: leaves compute `X_σᵀ x|_σ`, inner
/// clusters combine their children through the transfer matrices,
/// `s_σ = Σ E_σ'ᵀ s_σ'`.
pub fn h2_forward(tree: &ClusterTree, bases: &[ClusterBasis], x: &[f64], parallel: bool) -> CoeffStore {
    let out: Vec<OnceLock<Vec<f64>>> = (0..tree.len()).map(|_| OnceLock::new()).collect();
    nested_forward(tree, bases, x, tree.root(), &out, parallel);
    CoeffStore { coeffs: out.into_iter().map(|c| c.into_inner().expect("all clusters visited")).collect() }
}

/// Adds the coupling products of the block row of `c` to `t` and the dense
/// products of that row to `y|_c`.
#[inline]
fn block_row<K: BasisKind>(m: &BasisMatrix<K>, alpha: f64, x: &[f64], s: &CoeffStore, c: ClusterId, t: &mut [f64], y: &mut [f64]) {
    for &li in m.blocks.row_list(c) {
        let col = m.blocks.leaf(li).col;
        match &m.leaves[li] {
            BasisLeaf::Coupling(sm) => {
                if !t.is_empty() && sm.ncols() > 0 {
                    sm.gemv(1.0, s.get(col), t);
                }
            }
            BasisLeaf::Dense(d) => zmvm_dense(d, alpha, &x[m.tree.node(col).range.clone()], y),
        }
    }
}

fn row_densities<K: BasisKind>(m: &BasisMatrix<K>, alpha: f64, x: &[f64], c: ClusterId, y: &mut [f64]) {
    for &li in m.blocks.row_list(c) {
        if let BasisLeaf::Dense(d) = &m.leaves[li] {
            zmvm_dense(d, alpha, &x[m.tree.node(m.blocks.leaf(li).col).range.clone()], y);
        }
    }
}

fn expand(basis: &ClusterBasis, alpha: f64, t: &[f64], y: &mut [f64]) {
    if let Some(w) = basis.explicit.as_ref().filter(|_| basis.rank > 0) {
        w.gemv(alpha, t, y);
    }
}

fn uni_rows(m: &UniformHMatrix, alpha: f64, x: &[f64], s: &CoeffStore, locked: Option<&[Mutex<Vec<f64>>]>, c: ClusterId, y: &mut [f64], parallel: bool) {
    let basis = &m.row_bases[c];
    match locked {
        None => {
            let mut t = vec![0.0; basis.rank];
            block_row(m, alpha, x, s, c, &mut t, y);
            expand(basis, alpha, &t, y);
        }
        Some(acc) => {
            let t = acc[c].lock().expect("coefficient lock poisoned");
            expand(basis, alpha, &t, y);
            drop(t);
            row_densities(m, alpha, x, c, y);
        }
    }
    let children = split_children(&m.tree, c, y);
    par::for_each(parallel, children, |(ch, yc)| uni_rows(m, alpha, x, s, locked, ch, yc, parallel));
}

/// Uniform H-matrix product: forward transformation, then block rows from
/// root to leaves with `t_τ = Σ S_{τ,σ} s_σ` and `y|_τ += α(W_τ t_τ + D x)`.
/// Deterministic for any worker count.
pub fn uni_mvm(alpha: f64, m: &UniformHMatrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    let s = uni_forward(&m.tree, &m.col_bases, x, parallel);
    uni_rows(m, alpha, x, &s, None, m.tree.root(), y, parallel);
    Ok(())
}

/// Coupling products of all admissible leaves in parallel, accumulated
/// into lock-guarded `t_τ`.
fn locked_couplings<K: BasisKind>(m: &BasisMatrix<K>, s: &CoeffStore, parallel: bool) -> Vec<Mutex<Vec<f64>>> {
    let acc: Vec<Mutex<Vec<f64>>> = m.row_bases.iter().map(|b| Mutex::new(vec![0.0; b.rank])).collect();
    let admissible: Vec<usize> = (0..m.leaves.len()).filter(|&li| matches!(m.leaves[li], BasisLeaf::Coupling(_))).collect();
    par::for_each(parallel, admissible, |li| {
        let BasisLeaf::Coupling(sm) = &m.leaves[li] else { return };
        let b = m.blocks.leaf(li);
        if sm.nrows() == 0 || sm.ncols() == 0 {
            return;
        }
        let mut local = vec![0.0; sm.nrows()];
        sm.gemv(1.0, s.get(b.col), &mut local);
        let mut t = acc[b.row].lock().expect("coefficient lock poisoned");
        for (ti, v) in t.iter_mut().zip(&local) {
            *ti += v;
        }
    });
    acc
}

/// Uniform H-matrix product with the coupling products spread over all
/// admissible blocks and lock-guarded accumulation into `t_τ`.
pub fn uni_mvm_mutex(alpha: f64, m: &UniformHMatrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    let s = uni_forward(&m.tree, &m.col_bases, x, parallel);
    let acc = locked_couplings(m, &s, parallel);
    uni_rows(m, alpha, x, &s, Some(&acc), m.tree.root(), y, parallel);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn h2_rows(m: &H2Matrix, alpha: f64, x: &[f64], s: &CoeffStore, locked: Option<&[Mutex<Vec<f64>>]>, c: ClusterId, mut t: Vec<f64>, y: &mut [f64], parallel: bool) {
    let node = m.tree.node(c);
    let basis = &m.row_bases[c];
    match locked {
        None => block_row(m, alpha, x, s, c, &mut t, y),
        Some(acc) => {
            for (ti, v) in t.iter_mut().zip(acc[c].lock().expect("coefficient lock poisoned").iter()) {
                *ti += v;
            }
            row_densities(m, alpha, x, c, y);
        }
    }
    if node.is_leaf() {
        expand(basis, alpha, &t, y);
        return;
    }
    let children: Vec<(ClusterId, &mut [f64], Vec<f64>)> = split_children(&m.tree, c, y)
        .into_iter()
        .zip(&basis.transfer)
        .map(|((ch, yc), e)| {
            let mut tc = vec![0.0; e.nrows()];
            if !t.is_empty() && !tc.is_empty() {
                e.gemv(1.0, &t, &mut tc);
            }
            (ch, yc, tc)
        })
        .collect();
    par::for_each(parallel, children, |(ch, yc, tc)| h2_rows(m, alpha, x, s, locked, ch, tc, yc, parallel));
}

/// H²-matrix product: nested forward transformation, coupling products per
/// block row, then the backward transformation pushes `t_τ` through the
/// transfer matrices so the basis part reaches `y` only at leaf clusters.
/// Deterministic for any worker count.
pub fn h2_mvm(alpha: f64, m: &H2Matrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    let s = h2_forward(&m.tree, &m.col_bases, x, parallel);
    let root = m.tree.root();
    h2_rows(m, alpha, x, &s, None, root, vec![0.0; m.row_bases[root].rank], y, parallel);
    Ok(())
}

/// H²-matrix product with lock-guarded coupling accumulation.
pub fn h2_mvm_mutex(alpha: f64, m: &H2Matrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    let s = h2_forward(&m.tree, &m.col_bases, x, parallel);
    let acc = locked_couplings(m, &s, parallel);
    let root = m.tree.root();
    h2_rows(m, alpha, x, &s, Some(&acc), root, vec![0.0; m.row_bases[root].rank], y, parallel);
    Ok(())
}
