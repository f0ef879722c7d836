//! Error measures of an approximation `M̃` against a reference `M`.

use hmat::formats::{AnyMatrix, HLeaf};
use hmat::kernel::{assemble_dense, Kernel};
use hmat::mvm::Variant;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Result;

/// Probe count of the randomized estimator.
pub const PROBES: usize = 50;

pub fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖M̃ − M‖_F / ‖M‖_F` on the dense matrices.
pub fn frobenius_error(m: &AnyMatrix, reference: &nalgebra::DMatrix<f64>) -> f64 {
    (m.to_dense() - reference).norm() / reference.norm()
}

/// Spectral-norm ratio estimated from `probes` random products:
/// `max ‖(M̃ − M)x‖ / max ‖M x‖`.
pub fn probe_error(m: &AnyMatrix, reference: &AnyMatrix, probes: usize, seed: u64, parallel: bool) -> Result<f64> {
    let n = m.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (vm, vr) = (Variant::deterministic(m.tag()), Variant::deterministic(reference.tag()));
    let (mut diff, mut base): (f64, f64) = (0.0, 0.0);
    for _ in 0..probes {
        let x = random_vector(n, &mut rng);
        let mut y = vec![0.0; n];
        let mut yr = vec![0.0; n];
        vm.apply(1.0, m, &x, &mut y, parallel)?;
        vr.apply(1.0, reference, &x, &mut yr, parallel)?;
        for (a, b) in y.iter_mut().zip(&yr) {
            *a -= b;
        }
        diff = diff.max(norm(&y));
        base = base.max(norm(&yr));
    }
    Ok(if base > 0.0 { diff / base } else { diff })
}

/// Largest relative Frobenius error of a leaf block against the assembled
/// kernel block. Zero blocks are skipped.
pub fn blockwise_error(m: &AnyMatrix, kernel: &dyn Kernel) -> f64 {
    let tree = m.tree();
    let blocks = match m {
        AnyMatrix::H(h) => h.blocks(),
        AnyMatrix::Uniform(u) => u.blocks(),
        AnyMatrix::H2(h2) => h2.blocks(),
    };
    let mut worst: f64 = 0.0;
    for li in 0..blocks.n_leaves() {
        let b = blocks.leaf(li);
        let exact = assemble_dense(kernel, tree, b.row, b.col).values;
        let approx = match m {
            AnyMatrix::H(h) => match &h.leaves()[li] {
                HLeaf::Dense(d) => d.to_dense(),
                HLeaf::LowRank(lr) => lr.to_dense(),
            },
            AnyMatrix::Uniform(u) => u.block(li),
            AnyMatrix::H2(h2) => h2.block(li),
        };
        let norm = exact.norm();
        if norm > 0.0 {
            worst = worst.max((approx - &exact).norm() / norm);
        }
    }
    worst
}
