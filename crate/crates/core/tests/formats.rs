mod common;

use std::sync::Arc;

use common::{nested, uniform, Problem, Structure};
use hmat::cluster::{build_block_tree, build_cluster_tree, BlockKind, ClusterNode, Geometry, WeakAdmissibility};
use hmat::formats::{
    build_h2, build_hmatrix, build_uniform, compression_ratio, memory_footprint, Compression, Footprint, HLeaf, HMatrix, LowRankPayload,
    BLOCK_NODE_BYTES, CLUSTER_NODE_BYTES,
};
use hmat::kernel::SlpKernel;
use hmat::linalg::orthonormality_defect;
use hmat::zfp::{Codec, StoredMatrix};
use nalgebra::DMatrix;

fn never(_: &ClusterNode, _: &ClusterNode) -> bool {
    false
}

fn line_geometry(n: usize) -> Geometry {
    let points = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
    Geometry::new(points, vec![1.0; n]).unwrap()
}

/// Largest `‖B_rec − U Vᵀ‖_F / ‖U Vᵀ‖_F` over the admissible leaves.
fn worst_leaf_error(h: &HMatrix, block: impl Fn(usize) -> DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (li, leaf) in h.leaves().iter().enumerate() {
        if let HLeaf::LowRank(lr) = leaf {
            let d = lr.to_dense();
            worst = worst.max((block(li) - &d).norm() / d.norm());
        }
    }
    worst
}

#[test]
fn dense_only_hmatrix_equals_oracle_exactly() {
    let p = Problem::new(2, Structure::Standard);
    let blocks = Arc::new(build_block_tree(&p.tree, &never));
    let h = build_hmatrix(&p.kernel(), p.tree.clone(), blocks, 1e-6, true).unwrap();
    assert_eq!(h.lowrank_stats(), (0, 0));
    assert_eq!(h.to_dense(), p.dense());
}

#[test]
fn h_global_error_against_oracle() {
    let p = Problem::new(3, Structure::Standard);
    let h = p.h(1e-6);
    let d = p.dense();
    let err = (h.to_dense() - &d).norm() / d.norm();
    assert!(err <= 1e-5, "relative error {err:e}");
}

#[test]
fn hodlr_off_diagonal_leaves_are_low_rank() {
    let p = Problem::new(3, Structure::Hodlr);
    for b in p.blocks.leaves().iter().map(|&id| p.blocks.node(id)) {
        assert_eq!(b.kind == BlockKind::Admissible, b.row != b.col);
    }
    let h = p.h(1e-6);
    let d = p.dense();
    assert!((h.to_dense() - &d).norm() / d.norm() <= 1e-5);
}

#[test]
fn uniform_leaves_reconstruct_within_three_eps() {
    let p = Problem::new(3, Structure::Standard);
    for eps in [1e-4, 1e-6] {
        let h = p.h(eps);
        let u = uniform(&h);
        let worst = worst_leaf_error(&h, |li| u.block(li));
        assert!(worst <= 3.0 * eps, "eps {eps:e}: worst leaf {:.3}·eps", worst / eps);
    }
}

#[test]
fn nested_leaves_reconstruct_within_five_eps() {
    let p = Problem::new(3, Structure::Standard);
    for eps in [1e-4, 1e-6] {
        let h = p.h(eps);
        let h2 = nested(&h);
        let worst = worst_leaf_error(&h, |li| h2.block(li));
        assert!(worst <= 5.0 * eps, "eps {eps:e}: worst leaf {:.3}·eps", worst / eps);
    }
}

#[test]
fn bases_are_orthonormal() {
    let p = Problem::new(3, Structure::Standard);
    let h = p.h(1e-6);
    let u = build_uniform(&h, 1e-6, true).unwrap();
    for c in 0..p.tree.len() {
        assert!(orthonormality_defect(&u.row_basis(c)) <= 1e-12);
        assert!(orthonormality_defect(&u.col_basis(c)) <= 1e-12);
    }
    let h2 = build_h2(&u, 1e-6, true).unwrap();
    for c in 0..p.tree.len() {
        let node = p.tree.node(c);
        let b = &h2.row_bases()[c];
        assert_eq!(b.explicit.is_some(), node.is_leaf());
        assert!(orthonormality_defect(&h2.row_basis(c)) <= 1e-10, "cluster {c}");
        assert!(orthonormality_defect(&h2.col_basis(c)) <= 1e-10, "cluster {c}");
    }
}

#[test]
fn nested_basis_is_the_transfer_composition() {
    let p = Problem::new(3, Structure::Standard);
    let h2 = nested(&p.h(1e-6));
    for c in 0..p.tree.len() {
        let node = p.tree.node(c);
        if node.is_leaf() {
            continue;
        }
        let full = h2.row_basis(c);
        let b = &h2.row_bases()[c];
        for (&ch, e) in node.children.iter().zip(&b.transfer) {
            let r = &p.tree.node(ch).range;
            let part = h2.row_basis(ch) * e.to_dense();
            let stored = full.rows(r.start - node.range.start, r.len());
            assert!((stored - part).norm() <= 1e-12);
        }
    }
}

#[test]
fn coupling_dimensions_follow_basis_ranks() {
    let p = Problem::new(3, Structure::Standard);
    let u = uniform(&p.h(1e-4));
    for (li, leaf) in u.leaves().iter().enumerate() {
        let b = p.blocks.leaf(li);
        if let hmat::formats::BasisLeaf::Coupling(s) = leaf {
            assert_eq!(s.nrows(), u.row_bases()[b.row].rank);
            assert_eq!(s.ncols(), u.col_bases()[b.col].rank);
        }
    }
}

#[test]
fn no_admissible_blocks_gives_rank_zero_bases() {
    let p = Problem::new(2, Structure::Standard);
    let blocks = Arc::new(build_block_tree(&p.tree, &never));
    let h = build_hmatrix(&p.kernel(), p.tree.clone(), blocks, 1e-6, true).unwrap();
    let u = build_uniform(&h, 1e-6, true).unwrap();
    assert!(u.row_bases().iter().chain(u.col_bases()).all(|b| b.rank == 0));
    assert_eq!(u.to_dense(), h.to_dense());
    let h2 = build_h2(&u, 1e-6, true).unwrap();
    assert!(h2.row_bases().iter().chain(h2.col_bases()).all(|b| b.rank == 0 && b.transfer.iter().all(|e| e.n_values() == 0)));
    assert_eq!(h2.to_dense(), h.to_dense());
}

#[test]
fn dense_block_accounting() {
    let g = line_geometry(100);
    let tree = Arc::new(build_cluster_tree(&g, 100).unwrap());
    let blocks = Arc::new(build_block_tree(&tree, &never));
    let h = build_hmatrix(&SlpKernel::new(&g), tree.clone(), blocks.clone(), 1e-6, true).unwrap();
    let m = memory_footprint(&h, false);
    assert_eq!(m.dense, 80_000);
    assert_eq!((m.lowrank, m.bases, m.transfer), (0, 0, 0));
    assert_eq!(m.structure, CLUSTER_NODE_BYTES + BLOCK_NODE_BYTES + 8 * 100);
    assert_eq!(m.total(), m.payload() + m.structure);
}

#[test]
fn lowrank_block_accounting() {
    let g = line_geometry(200);
    let tree = Arc::new(build_cluster_tree(&g, 100).unwrap());
    let blocks = Arc::new(build_block_tree(&tree, &WeakAdmissibility));
    let leaves = (0..blocks.n_leaves())
        .map(|li| match blocks.leaf(li).kind {
            BlockKind::Admissible => HLeaf::LowRank(LowRankPayload {
                u: StoredMatrix::plain(&DMatrix::from_element(100, 5, 0.5)),
                v: StoredMatrix::plain(&DMatrix::from_element(100, 5, 0.25)),
                sigma: vec![1.0; 5],
                sigma_in_u: true,
            }),
            _ => HLeaf::Dense(StoredMatrix::zeros(100, 100)),
        })
        .collect();
    let h = HMatrix::from_parts(tree, blocks.clone(), leaves, 1e-6, None).unwrap();
    assert_eq!(blocks.count(BlockKind::Admissible), 2);
    let m = h.footprint(false);
    assert_eq!(m.lowrank, 2 * 8_000);
    assert_eq!(m.dense, 2 * 80_000);
}

#[test]
fn from_parts_rejects_mismatched_payloads() {
    let g = line_geometry(200);
    let tree = Arc::new(build_cluster_tree(&g, 100).unwrap());
    let blocks = Arc::new(build_block_tree(&tree, &WeakAdmissibility));
    let leaves = vec![HLeaf::Dense(StoredMatrix::zeros(100, 100)); blocks.n_leaves()];
    assert!(HMatrix::from_parts(tree.clone(), blocks.clone(), leaves, 1e-6, None).is_err());
    assert!(HMatrix::from_parts(tree, blocks, Vec::new(), 1e-6, None).is_err());
}

#[test]
fn compression_ratio_exceeds_one() {
    let p = Problem::new(3, Structure::Standard);
    for eps in [1e-4, 1e-6, 1e-8, 1e-10] {
        let h = p.h(eps);
        for codec in [Codec::Aflp, Codec::Fpx] {
            for valr in [false, true] {
                let c = h.compress(Compression { codec, valr }, true).unwrap();
                let ratio = compression_ratio(&c);
                assert!(ratio > 1.0, "eps {eps:e} {codec:?} valr {valr}: ratio {ratio}");
                assert_eq!(c.footprint(false), h.footprint(false));
            }
        }
    }
}

#[test]
fn compressed_shared_bases_stay_accurate() {
    let p = Problem::new(3, Structure::Standard);
    let eps = 1e-6;
    let h = p.h(eps);
    let u = uniform(&h);
    let h2 = build_h2(&u, eps, true).unwrap();
    let d = h.to_dense();
    for codec in [Codec::Aflp, Codec::Fpx] {
        for valr in [false, true] {
            let c = Compression { codec, valr };
            let eu = (u.compress(c, true).unwrap().to_dense() - &d).norm() / d.norm();
            let e2 = (h2.compress(c, true).unwrap().to_dense() - &d).norm() / d.norm();
            assert!(eu <= 5.0 * eps && e2 <= 5.0 * eps, "{codec:?} valr {valr}: uh {eu:e} h2 {e2:e}");
        }
    }
}
