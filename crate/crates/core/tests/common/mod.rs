//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use hmat::cluster::{build_block_tree, build_cluster_tree, flat_clustering, make_sphere_geometry, BlockTree, ClusterTree, Geometry, StandardAdmissibility, WeakAdmissibility};
use hmat::formats::{build_h2, build_hmatrix, build_uniform, H2Matrix, HMatrix, UniformHMatrix};
use hmat::kernel::{permuted_full, SlpKernel};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Standard,
    Hodlr,
    Blr,
}

pub struct Problem {
    pub geom: Geometry,
    pub tree: Arc<ClusterTree>,
    pub blocks: Arc<BlockTree>,
}

impl Problem {
    pub fn new(refinement: usize, structure: Structure) -> Self {
        Self::with_leaf_size(refinement, structure, 32)
    }

    pub fn with_leaf_size(refinement: usize, structure: Structure, n_min: usize) -> Self {
        let geom = make_sphere_geometry(refinement).unwrap();
        let tree = Arc::new(match structure {
            Structure::Blr => flat_clustering(&geom, 16).unwrap(),
            _ => build_cluster_tree(&geom, n_min).unwrap(),
        });
        let blocks = Arc::new(match structure {
            Structure::Standard => build_block_tree(&tree, &StandardAdmissibility { eta: 2.0 }),
            _ => build_block_tree(&tree, &WeakAdmissibility),
        });
        Self { geom, tree, blocks }
    }

    pub fn n(&self) -> usize {
        self.geom.len()
    }

    pub fn kernel(&self) -> SlpKernel<'_> {
        SlpKernel::new(&self.geom)
    }

    pub fn h(&self, eps: f64) -> HMatrix {
        build_hmatrix(&self.kernel(), self.tree.clone(), self.blocks.clone(), eps, true).unwrap()
    }

    /// Brute-force matrix in permuted order.
    pub fn dense(&self) -> DMatrix<f64> {
        permuted_full(&self.kernel(), &self.tree)
    }
}

pub fn uniform(h: &HMatrix) -> UniformHMatrix {
    build_uniform(h, h.eps(), true).unwrap()
}

pub fn nested(h: &HMatrix) -> H2Matrix {
    build_h2(&uniform(h), h.eps(), true).unwrap()
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `y = α·M·x` with the dense oracle.
pub fn dense_product(m: &DMatrix<f64>, alpha: f64, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x) * alpha).as_slice().to_vec()
}
