use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::Kernel;
use crate::cluster::{ClusterId, ClusterTree};
use crate::linalg::{frobenius, truncation_rank, Svd};

/// ACA stops at `eps / ACA_SAFETY`; the SVD recompression decides the rank.
pub const ACA_SAFETY: f64 = 10.0;

/// Share of the error budget left to SVD truncation after ACA.
const TRUNCATION_SHARE: f64 = 0.8;

/// Blocks with at most this many entries go straight to a dense SVD.
const DENSE_SVD_CUTOFF: usize = 1024;

/// `M ≈ W · diag(σ) · Xᵀ` with orthonormal `W`, `X` and descending
/// positive `σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankBlock {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub w: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

impl LowRankBlock {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Row factor with the singular values folded in, `U = W·Σ`.
    pub fn u(&self) -> DMatrix<f64> {
        let mut u = self.w.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            u.column_mut(j).scale_mut(*s);
        }
        u
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.u() * self.x.transpose()
    }

    /// Frobenius norm of the represented block.
    pub fn norm(&self) -> f64 {
        frobenius(&self.sigma)
    }
}

/// Adaptive cross approximation with partial pivoting. Returns `U`, `V` with
/// `M ≈ U Vᵀ`, or `None` when no convergence was reached before full rank.
pub fn aca_partial_pivoting(kernel: &dyn Kernel, rows: &[usize], cols: &[usize], tol: f64) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, n) = (rows.len(), cols.len());
    let max_rank = m.min(n);
    let mut us: Vec<DVector<f64>> = Vec::new();
    let mut vs: Vec<DVector<f64>> = Vec::new();
    let mut used_rows = vec![false; m];
    let mut norm2 = 0.0f64;
    let mut pivot_row = 0usize;
    loop {
        // residual row at the pivot
        used_rows[pivot_row] = true;
        let mut row = DVector::from_fn(n, |j, _| kernel.entry(rows[pivot_row], cols[j]));
        for (u, v) in us.iter().zip(&vs) {
            row.axpy(-u[pivot_row], v, 1.0);
        }
        let (jmax, pivot) = row.iter().enumerate().fold((0, 0.0f64), |best, (j, &r)| if r.abs() > best.1.abs() { (j, r) } else { best });
        if pivot == 0.0 {
            // zero residual row: try another unused row, else the residual is exhausted
            match used_rows.iter().position(|&u| !u) {
                Some(next) => {
                    pivot_row = next;
                    continue;
                }
                None => break,
            }
        }
        let v = row / pivot;
        let mut u = DVector::from_fn(m, |i, _| kernel.entry(rows[i], cols[jmax]));
        for (uk, vk) in us.iter().zip(&vs) {
            u.axpy(-vk[jmax], uk, 1.0);
        }
        let (unorm, vnorm) = (u.norm(), v.norm());
        let mut cross = 0.0;
        for (uk, vk) in us.iter().zip(&vs) {
            cross += u.dot(uk) * v.dot(vk);
        }
        norm2 += 2.0 * cross + unorm * unorm * vnorm * vnorm;
        let converged = unorm * vnorm <= tol * norm2.max(0.0).sqrt();
        us.push(u);
        vs.push(v);
        if converged {
            break;
        }
        if us.len() >= max_rank {
            return None;
        }
        let last = us.last().expect("just pushed");
        match (0..m).filter(|&i| !used_rows[i]).max_by(|&a, &b| last[a].abs().total_cmp(&last[b].abs())) {
            Some(next) => pivot_row = next,
            None => break,
        }
    }
    let k = us.len();
    Some((DMatrix::from_fn(m, k, |i, c| us[c][i]), DMatrix::from_fn(n, k, |j, c| vs[c][j])))
}

fn truncated(svd: Svd, norm: f64, tol: f64) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let mut k = truncation_rank(&svd.sigma, tol * norm);
    if k == 0 && svd.sigma.first().is_some_and(|&s| s > 0.0) {
        k = 1;
    }
    let svd = svd.truncate(k);
    (svd.u, svd.v, svd.sigma)
}

/// Truncated SVD of an assembled block keeping the smallest rank with
/// discarded Frobenius mass `≤ eps·‖M‖_F`.
pub fn lowrank_from_dense(m: &DMatrix<f64>, rows: Range<usize>, cols: Range<usize>, eps: f64) -> LowRankBlock {
    let norm = m.norm();
    let (w, x, sigma) = truncated(Svd::new(m), norm, eps);
    LowRankBlock { rows, cols, w, x, sigma }
}

/// ε-accurate low-rank approximation `‖M − W Σ Xᵀ‖_F ≤ ε‖M‖_F` of the block
/// `t × s`: ACA to `ε/10`, then QR of both factors and a truncated SVD of
/// the small core. Falls back to a dense SVD when ACA stagnates.
pub fn lowrank_approx(kernel: &dyn Kernel, tree: &ClusterTree, t: ClusterId, s: ClusterId, eps: f64) -> LowRankBlock {
    let rows = tree.node(t).range.clone();
    let cols = tree.node(s).range.clone();
    let ridx = &tree.perm()[rows.clone()];
    let cidx = &tree.perm()[cols.clone()];
    if ridx.len() * cidx.len() <= DENSE_SVD_CUTOFF {
        return lowrank_from_dense(&kernel.block(ridx, cidx), rows, cols, eps);
    }
    let Some((u, v)) = aca_partial_pivoting(kernel, ridx, cidx, eps / ACA_SAFETY) else {
        return lowrank_from_dense(&kernel.block(ridx, cidx), rows, cols, eps);
    };
    let (qu, ru) = { let qr = u.qr(); (qr.q(), qr.r()) };
    let (qv, rv) = { let qr = v.qr(); (qr.q(), qr.r()) };
    let core = Svd::new(&(ru * rv.transpose()));
    let norm = frobenius(&core.sigma);
    let (cu, cv, sigma) = truncated(core, norm, TRUNCATION_SHARE * eps);
    LowRankBlock { rows, cols, w: qu * cu, x: qv * cv, sigma }
}
