//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Thin singular value decomposition with singular values sorted in
/// descending order: `a = u · diag(sigma) · vᵀ`.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Self { u: DMatrix::zeros(m, 0), sigma: Vec::new(), v: DMatrix::zeros(n, 0) };
        }
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("left singular vectors requested");
        let vt = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u = DMatrix::from_fn(m, order.len(), |r, c| u[(r, order[c])]);
        let v = DMatrix::from_fn(n, order.len(), |r, c| vt[(order[c], r)]);
        Self { u, sigma, v }
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(mut self, k: usize) -> Self {
        let k = k.min(self.sigma.len());
        self.sigma.truncate(k);
        self.u = self.u.columns(0, k).into_owned();
        self.v = self.v.columns(0, k).into_owned();
        self
    }
}

/// Smallest `k` with `sqrt(Σ_{i≥k} σᵢ²) ≤ tol` for descending `sigma`.
/// Exact zeros are always dropped.
pub fn truncation_rank(sigma: &[f64], tol: f64) -> usize {
    let mut tail = 0.0;
    let mut k = sigma.len();
    while k > 0 {
        let next = tail + sigma[k - 1] * sigma[k - 1];
        if next.sqrt() > tol && sigma[k - 1] > 0.0 {
            break;
        }
        tail = next;
        k -= 1;
    }
    k
}

pub fn frobenius(sigma: &[f64]) -> f64 {
    sigma.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Orthonormal basis of the column space of `a`, truncated so the discarded
/// Frobenius mass is at most `tol`. Returns the basis and the retained
/// singular values.
pub fn column_basis(a: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, Vec<f64>) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (DMatrix::zeros(m, 0), Vec::new());
    }
    // for tall inputs reduce to the triangular factor first
    let svd = if m > 2 * n {
        let qr = a.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let inner = Svd::new(&r);
        Svd { u: q * inner.u, sigma: inner.sigma, v: inner.v }
    } else {
        Svd::new(a)
    };
    let k = truncation_rank(&svd.sigma, tol);
    let svd = svd.truncate(k);
    (svd.u, svd.sigma)
}

/// `‖qᵀq − I‖_max`, the orthonormality defect of the columns of `q`.
pub fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
    let g = q.transpose() * q;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_svd_reconstructs() {
        let a = DMatrix::from_fn(7, 4, |i, j| ((i * 3 + j * 5) % 7) as f64 - 2.5 + (i as f64) * 0.1);
        let s = Svd::new(&a);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        let back = &s.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.sigma.clone())) * s.v.transpose();
        assert!((back - &a).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn truncation_rule() {
        let s = [4.0, 3.0, 0.3, 0.4e-1];
        assert_eq!(truncation_rank(&s, 0.0), 4);
        assert_eq!(truncation_rank(&s, 0.05), 3);
        assert_eq!(truncation_rank(&s, 0.31), 2);
        assert_eq!(truncation_rank(&s, 5.0), 1);
        assert_eq!(truncation_rank(&s, 5.1), 0);
        assert_eq!(truncation_rank(&[1.0, 0.0], 0.0), 1);
    }

    #[test]
    fn tall_basis_is_orthonormal() {
        let a = DMatrix::from_fn(60, 5, |i, j| ((i + 1) as f64).powi(j as i32 % 3) / (1.0 + j as f64));
        let (q, sigma) = column_basis(&a, 1e-10);
        assert!(orthonormality_defect(&q) < 1e-12);
        assert!(sigma.len() <= 5);
        let proj = &q * (q.transpose() * &a);
        assert!((proj - &a).norm() <= 1e-10 * 1.0001);
    }
}
