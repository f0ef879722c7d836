use std::sync::Mutex;

use super::{check_dims, split_children, split_leaves, zmvm_dense};
use crate::cluster::ClusterId;
use crate::formats::{HLeaf, HMatrix};
use crate::par;
use crate::Result;

/// `y += α·B·x` for one leaf, `x` and `y` restricted to the block.
#[inline]
pub(crate) fn leaf_mvm(leaf: &HLeaf, alpha: f64, x: &[f64], y: &mut [f64]) {
    match leaf {
        HLeaf::Dense(d) => zmvm_dense(d, alpha, x, y),
        HLeaf::LowRank(lr) => {
            let mut t = vec![0.0; lr.rank()];
            lr.v.gemv_t(1.0, x, &mut t);
            if !lr.sigma_in_u {
                for (ti, s) in t.iter_mut().zip(&lr.sigma) {
                    *ti *= s;
                }
            }
            lr.u.gemv(alpha, &t, y);
        }
    }
}

/// `y += α·Bᵀ·x` for one leaf.
#[inline]
fn leaf_mvm_t(leaf: &HLeaf, alpha: f64, x: &[f64], y: &mut [f64]) {
    match leaf {
        HLeaf::Dense(d) => d.gemv_t(alpha, x, y),
        HLeaf::LowRank(lr) => {
            let mut t = vec![0.0; lr.rank()];
            lr.u.gemv_t(1.0, x, &mut t);
            if !lr.sigma_in_u {
                for (ti, s) in t.iter_mut().zip(&lr.sigma) {
                    *ti *= s;
                }
            }
            lr.v.gemv(alpha, &t, y);
        }
    }
}

fn leaf_ranges(m: &HMatrix, li: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let b = m.blocks.leaf(li);
    (m.tree.node(b.row).range.clone(), m.tree.node(b.col).range.clone())
}

/// Sequential product over all leaf blocks in leaf order.
pub fn hmvm_seq(alpha: f64, m: &HMatrix, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    for (li, leaf) in m.leaves.iter().enumerate() {
        let (rows, cols) = leaf_ranges(m, li);
        leaf_mvm(leaf, alpha, &x[cols], &mut y[rows]);
    }
    Ok(())
}

/// Blocks in parallel; each block result is added to the leaf-cluster
/// chunks of `y` it covers, one lock per chunk.
pub fn hmvm_chunks(alpha: f64, m: &HMatrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    let tree = &m.tree;
    let chunks: Vec<Mutex<&mut [f64]>> = split_leaves(tree, y).into_iter().map(Mutex::new).collect();
    par::for_each(parallel, (0..m.leaves.len()).collect(), |li| {
        let (rows, cols) = leaf_ranges(m, li);
        let mut local = vec![0.0; rows.len()];
        leaf_mvm(&m.leaves[li], alpha, &x[cols], &mut local);
        let row = m.blocks.leaf(li).row;
        for pos in tree.leaf_span(row) {
            let r = &tree.node(tree.leaves()[pos]).range;
            let part = &local[r.start - rows.start..r.end - rows.start];
            let mut chunk = chunks[pos].lock().expect("chunk lock poisoned");
            for (yi, v) in chunk.iter_mut().zip(part) {
                *yi += v;
            }
        }
    });
    Ok(())
}

fn row_recursion(m: &HMatrix, alpha: f64, x: &[f64], c: ClusterId, y: &mut [f64], parallel: bool) {
    for &li in m.blocks.row_list(c) {
        let (_, cols) = leaf_ranges(m, li);
        leaf_mvm(&m.leaves[li], alpha, &x[cols], y);
    }
    let children = split_children(&m.tree, c, y);
    par::for_each(parallel, children, |(ch, yc)| row_recursion(m, alpha, x, ch, yc, parallel));
}

/// Block rows from the root to the leaves: a cluster's block row is done
/// before its children start, and children run in parallel on disjoint
/// slices of `y`. The result does not depend on the worker count.
pub fn hmvm_cluster_lists(alpha: f64, m: &HMatrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    row_recursion(m, alpha, x, m.tree.root(), y, parallel);
    Ok(())
}

/// Per-worker private copies of `y`, summed at the end.
pub fn hmvm_thread_local(alpha: f64, m: &HMatrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    let n = m.n();
    let acc = par::fold_reduce(
        parallel,
        m.leaves.len(),
        || vec![0.0; n],
        |mut acc, li| {
            let (rows, cols) = leaf_ranges(m, li);
            leaf_mvm(&m.leaves[li], alpha, &x[cols], &mut acc[rows]);
            acc
        },
        |mut a, b| {
            for (ai, bi) in a.iter_mut().zip(&b) {
                *ai += bi;
            }
            a
        },
    );
    for (yi, a) in y.iter_mut().zip(&acc) {
        *yi += a;
    }
    Ok(())
}

fn col_recursion(m: &HMatrix, alpha: f64, x: &[f64], c: ClusterId, y: &mut [f64], parallel: bool) {
    for &li in m.blocks.col_list(c) {
        let (rows, _) = leaf_ranges(m, li);
        leaf_mvm_t(&m.leaves[li], alpha, &x[rows], y);
    }
    let children = split_children(&m.tree, c, y);
    par::for_each(parallel, children, |(ch, yc)| col_recursion(m, alpha, x, ch, yc, parallel));
}

/// `y += α·Mᵀ·x` through the block columns, deterministic like
/// [`hmvm_cluster_lists`].
pub fn hmvm_adjoint(alpha: f64, m: &HMatrix, x: &[f64], y: &mut [f64], parallel: bool) -> Result<()> {
    check_dims(m.n(), x, y)?;
    if alpha == 0.0 {
        return Ok(());
    }
    col_recursion(m, alpha, x, m.tree.root(), y, parallel);
    Ok(())
}
