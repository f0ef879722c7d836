mod common;

use std::sync::Arc;

use common::{dense_product, diff_norm, nested, norm, random_vector, uniform, Problem, Structure};
use hmat::cluster::{build_block_tree, ClusterNode};
use hmat::formats::{build_hmatrix, expand_basis, AnyMatrix, Compression};
use hmat::mvm::{h2_forward, hmvm_adjoint, hmvm_cluster_lists, hmvm_seq, uni_forward, MvmCost, Variant};
use hmat::par::with_threads;
use hmat::zfp::Codec;
use hmat::Error;
use proptest::prelude::*;

fn never(_: &ClusterNode, _: &ClusterNode) -> bool {
    false
}

fn formats(p: &Problem, eps: f64) -> Vec<AnyMatrix> {
    let h = p.h(eps);
    let u = uniform(&h);
    let h2 = nested(&h);
    vec![AnyMatrix::H(h), AnyMatrix::Uniform(u), AnyMatrix::H2(h2)]
}

fn product(v: Variant, m: &AnyMatrix, alpha: f64, x: &[f64], parallel: bool) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    v.apply(alpha, m, x, &mut y, parallel).unwrap();
    y
}

/// Oracle constant of a format: the approximation stack of the format plus
/// the compression budget.
fn oracle_constant(tag: u8, compressed: bool) -> f64 {
    let base = match tag {
        0 => 1.0,
        1 => 5.0,
        _ => 7.0,
    };
    if compressed {
        base + 3.0
    } else {
        base
    }
}

#[test]
fn every_variant_matches_dense_oracle() {
    let p = Problem::new(2, Structure::Standard);
    let d = p.dense();
    let dn = d.norm();
    let x = random_vector(p.n(), 1);
    let eps = 1e-6;
    let exact = dense_product(&d, 1.0, &x);
    let exact_t = dense_product(&d.transpose(), 1.0, &x);
    for m in formats(&p, eps) {
        for v in Variant::for_format(m.tag()) {
            for parallel in [false, true] {
                let y = product(v, &m, 1.0, &x, parallel);
                let reference = if v == Variant::Adjoint { &exact_t } else { &exact };
                let err = diff_norm(&y, reference) / (dn * norm(&x));
                assert!(err <= oracle_constant(m.tag(), false) * eps, "{v}: {err:e}");
            }
        }
    }
}

#[test]
fn dense_only_products_match_oracle_tightly() {
    let p = Problem::new(2, Structure::Standard);
    let blocks = Arc::new(build_block_tree(&p.tree, &never));
    let h = build_hmatrix(&p.kernel(), p.tree.clone(), blocks, 1e-6, true).unwrap();
    let d = p.dense();
    let x = random_vector(p.n(), 2);
    let m = AnyMatrix::H(h);
    for v in Variant::for_format(0) {
        let y = product(v, &m, -0.5, &x, true);
        let reference = if v == Variant::Adjoint { dense_product(&d.transpose(), -0.5, &x) } else { dense_product(&d, -0.5, &x) };
        assert!(diff_norm(&y, &reference) <= 1e-13 * norm(&reference), "{v}");
    }
}

#[test]
fn h_variants_agree() {
    let p = Problem::new(3, Structure::Standard);
    let m = AnyMatrix::H(p.h(1e-6));
    let x = random_vector(p.n(), 3);
    let base = product(Variant::Seq, &m, 1.0, &x, false);
    for v in [Variant::Chunks, Variant::ClusterLists, Variant::ThreadLocal] {
        let y = product(v, &m, 1.0, &x, true);
        assert!(diff_norm(&y, &base) <= 1e-13 * norm(&base), "{v}");
    }
}

#[test]
fn mutex_variants_agree_with_row_variants() {
    let p = Problem::new(3, Structure::Standard);
    let x = random_vector(p.n(), 4);
    for m in formats(&p, 1e-6).into_iter().skip(1) {
        let [a, b] = Variant::for_format(m.tag())[..] else { panic!("two variants per shared format") };
        let ya = product(a, &m, 1.0, &x, true);
        let yb = product(b, &m, 1.0, &x, true);
        assert!(diff_norm(&ya, &yb) <= 1e-12 * norm(&ya), "{a} vs {b}");
    }
}

#[test]
fn shared_formats_follow_hmatrix_product() {
    let p = Problem::new(3, Structure::Standard);
    let eps = 1e-6;
    let all = formats(&p, eps);
    let AnyMatrix::H(h) = &all[0] else { unreachable!() };
    let mn = h.to_dense().norm();
    let x = random_vector(p.n(), 5);
    let mut yh = vec![0.0; p.n()];
    hmvm_seq(1.0, h, &x, &mut yh).unwrap();
    for (m, c) in all[1..].iter().zip([4.0, 6.0]) {
        let y = product(Variant::deterministic(m.tag()), m, 1.0, &x, true);
        assert!(diff_norm(&y, &yh) <= c * eps * mn * norm(&x));
    }
}

#[test]
fn adjoint_of_symmetric_matrix_equals_forward() {
    let p = Problem::new(3, Structure::Standard);
    let eps = 1e-6;
    let h = p.h(eps);
    let x = random_vector(p.n(), 6);
    let mut y = vec![0.0; p.n()];
    let mut yt = vec![0.0; p.n()];
    hmvm_cluster_lists(1.0, &h, &x, &mut y, true).unwrap();
    hmvm_adjoint(1.0, &h, &x, &mut yt, true).unwrap();
    assert!(diff_norm(&y, &yt) <= 2.0 * eps * h.to_dense().norm() * norm(&x));
}

#[test]
fn alpha_zero_leaves_y_unchanged() {
    let p = Problem::new(2, Structure::Standard);
    let x = random_vector(p.n(), 7);
    for m in formats(&p, 1e-4) {
        for v in Variant::for_format(m.tag()) {
            let mut y = random_vector(p.n(), 8);
            let before = y.clone();
            v.apply(0.0, &m, &x, &mut y, true).unwrap();
            assert!(y.iter().zip(&before).all(|(a, b)| a.to_bits() == b.to_bits()), "{v}");
        }
    }
}

#[test]
fn products_accumulate_into_y() {
    let p = Problem::new(2, Structure::Standard);
    let x = random_vector(p.n(), 9);
    let y0 = random_vector(p.n(), 10);
    for m in formats(&p, 1e-4) {
        for v in Variant::for_format(m.tag()) {
            let plain = product(v, &m, 2.0, &x, false);
            let mut y = y0.clone();
            v.apply(2.0, &m, &x, &mut y, false).unwrap();
            let expected: Vec<f64> = y0.iter().zip(&plain).map(|(a, b)| a + b).collect();
            assert!(diff_norm(&y, &expected) <= 1e-14 * norm(&expected), "{v}");
        }
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let p = Problem::new(2, Structure::Standard);
    let n = p.n();
    for m in formats(&p, 1e-4) {
        for v in Variant::for_format(m.tag()) {
            let mut y = vec![0.0; n];
            assert!(matches!(v.apply(1.0, &m, &vec![0.0; n + 1], &mut y, true), Err(Error::DimensionMismatch { .. })));
            let mut short = vec![0.0; n - 1];
            assert!(matches!(v.apply(1.0, &m, &vec![0.0; n], &mut short, true), Err(Error::DimensionMismatch { .. })));
        }
        let wrong = Variant::ALL.into_iter().find(|v| v.format_tag() != m.tag()).unwrap();
        assert!(wrong.apply(1.0, &m, &vec![0.0; n], &mut vec![0.0; n], true).is_err());
    }
}

#[test]
fn linearity() {
    let p = Problem::new(2, Structure::Standard);
    let x1 = random_vector(p.n(), 11);
    let x2 = random_vector(p.n(), 12);
    let sum: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
    for m in formats(&p, 1e-6) {
        for v in Variant::for_format(m.tag()) {
            let y1 = product(v, &m, 1.5, &x1, true);
            let y2 = product(v, &m, 1.5, &x2, true);
            let y = product(v, &m, 1.5, &sum, true);
            let split: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
            assert!(diff_norm(&y, &split) <= 1e-12 * norm(&y), "{v}");
        }
    }
}

#[test]
fn deterministic_variants_are_bitwise_reproducible() {
    let p = Problem::new(3, Structure::Standard);
    let x = random_vector(p.n(), 13);
    for m in formats(&p, 1e-6) {
        for v in Variant::for_format(m.tag()).into_iter().filter(|v| v.is_deterministic()) {
            let seq = product(v, &m, 1.0, &x, false);
            for threads in [1, 2, 0] {
                let y = with_threads(threads, || product(v, &m, 1.0, &x, true));
                assert!(y.iter().zip(&seq).all(|(a, b)| a.to_bits() == b.to_bits()), "{v} with {threads} workers");
            }
        }
    }
}

#[test]
fn forward_transformations() {
    let p = Problem::new(3, Structure::Standard);
    let h = p.h(1e-6);
    let u = uniform(&h);
    let h2 = nested(&h);
    let x = random_vector(p.n(), 14);
    let s = uni_forward(&p.tree, u.col_bases(), &x, true);
    let s2 = h2_forward(&p.tree, h2.col_bases(), &x, true);
    assert_eq!(s.len(), p.tree.len());
    for c in 0..p.tree.len() {
        let r = p.tree.node(c).range.clone();
        let xc = nalgebra::DVector::from_column_slice(&x[r]);
        let direct = u.col_basis(c).transpose() * &xc;
        assert_eq!(s.get(c).len(), u.col_bases()[c].rank);
        assert!((nalgebra::DVector::from_column_slice(s.get(c)) - &direct).norm() <= 1e-14 * (1.0 + direct.norm()));
        let expanded = expand_basis(&p.tree, h2.col_bases(), c).transpose() * &xc;
        assert!((nalgebra::DVector::from_column_slice(s2.get(c)) - &expanded).norm() <= 1e-12 * (1.0 + expanded.norm()));
    }
    let zero = vec![0.0; p.n()];
    let z = uni_forward(&p.tree, u.col_bases(), &zero, true);
    let z2 = h2_forward(&p.tree, h2.col_bases(), &zero, true);
    assert!((0..p.tree.len()).all(|c| z.get(c).iter().chain(z2.get(c)).all(|&v| v == 0.0)));
}

#[test]
fn rank_zero_bases_reduce_to_dense_rows() {
    let p = Problem::new(2, Structure::Standard);
    let blocks = Arc::new(build_block_tree(&p.tree, &never));
    let h = build_hmatrix(&p.kernel(), p.tree.clone(), blocks, 1e-6, true).unwrap();
    let u = uniform(&h);
    let h2 = nested(&h);
    let x = random_vector(p.n(), 15);
    assert!(uni_forward(&p.tree, u.col_bases(), &x, true).get(0).is_empty());
    let yh = product(Variant::Seq, &AnyMatrix::H(h), 1.0, &x, false);
    for m in [AnyMatrix::Uniform(u), AnyMatrix::H2(h2)] {
        for v in Variant::for_format(m.tag()) {
            assert!(diff_norm(&product(v, &m, 1.0, &x, true), &yh) <= 1e-13 * norm(&yh), "{v}");
        }
    }
}

#[test]
fn compressed_products_stay_close_to_uncompressed() {
    let p = Problem::new(3, Structure::Standard);
    let x = random_vector(p.n(), 16);
    for eps in [1e-4, 1e-6] {
        for m in formats(&p, eps) {
            let mn = m.to_dense().norm();
            let v = Variant::deterministic(m.tag());
            let plain = product(v, &m, 1.0, &x, true);
            for codec in [Codec::Aflp, Codec::Fpx] {
                for valr in [false, true] {
                    let c = m.compress(Compression { codec, valr }, true).unwrap();
                    let y = product(v, &c, 1.0, &x, true);
                    let dev = diff_norm(&y, &plain);
                    assert!(dev <= 10.0 * eps * mn * norm(&x), "{v} {codec:?} valr {valr}");
                    if eps == 1e-4 && codec == Codec::Aflp {
                        assert!(dev <= 1e-3 * norm(&plain));
                    }
                    let (wc, wp) = (c.mvm_work(), m.mvm_work());
                    assert!(wc.flops >= wp.flops && wc.flops <= 1.01 * wp.flops);
                    assert!(wc.bytes < wp.bytes);
                }
            }
        }
    }
}

#[test]
fn hodlr_and_blr_products() {
    let eps = 1e-6;
    for structure in [Structure::Hodlr, Structure::Blr] {
        let p = Problem::new(2, structure);
        let d = p.dense();
        let x = random_vector(p.n(), 17);
        let exact = dense_product(&d, 1.0, &x);
        for m in formats(&p, eps) {
            let v = Variant::deterministic(m.tag());
            let err = diff_norm(&product(v, &m, 1.0, &x, true), &exact) / (d.norm() * norm(&x));
            assert!(err <= oracle_constant(m.tag(), false) * eps, "{structure:?} {v}: {err:e}");
        }
    }
}

#[test]
fn variant_names_round_trip() {
    for v in Variant::ALL {
        assert_eq!(v.name().parse::<Variant>().unwrap(), v);
    }
    assert!("nope".parse::<Variant>().is_err());
    assert_eq!(Variant::for_format(0).len(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn row_recursion_matches_leaf_loop(seed in any::<u64>(), alpha in -4.0f64..4.0) {
        let p = Problem::new(2, Structure::Standard);
        let h = p.h(1e-6);
        let x = random_vector(p.n(), seed);
        let mut y1 = vec![0.0; p.n()];
        let mut y2 = vec![0.0; p.n()];
        hmvm_seq(alpha, &h, &x, &mut y1).unwrap();
        hmvm_cluster_lists(alpha, &h, &x, &mut y2, true).unwrap();
        prop_assert!(diff_norm(&y1, &y2) <= 1e-13 * (norm(&y1) + f64::MIN_POSITIVE));
    }
}
