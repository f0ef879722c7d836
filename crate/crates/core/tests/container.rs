mod common;

use common::{nested, uniform, Problem, Structure};
use hmat::formats::{AnyMatrix, Compression};
use hmat::zfp::Codec;
use hmat::Error;

fn samples() -> Vec<AnyMatrix> {
    let p = Problem::new(2, Structure::Standard);
    let h = p.h(1e-4);
    let u = uniform(&h);
    let h2 = nested(&h);
    let mut out = vec![AnyMatrix::H(h.clone()), AnyMatrix::Uniform(u.clone()), AnyMatrix::H2(h2.clone())];
    for codec in [Codec::Aflp, Codec::Fpx] {
        for valr in [false, true] {
            let c = Compression { codec, valr };
            out.push(AnyMatrix::H(h.compress(c, true).unwrap()));
            out.push(AnyMatrix::Uniform(u.compress(c, true).unwrap()));
            out.push(AnyMatrix::H2(h2.compress(c, true).unwrap()));
        }
    }
    out
}

fn dense(m: &AnyMatrix) -> nalgebra::DMatrix<f64> {
    match m {
        AnyMatrix::H(h) => h.to_dense(),
        AnyMatrix::Uniform(u) => u.to_dense(),
        AnyMatrix::H2(h2) => h2.to_dense(),
    }
}

#[test]
fn round_trip_is_lossless() {
    for m in samples() {
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"HMZC");
        let back = AnyMatrix::from_bytes(&bytes).unwrap();
        assert_eq!(back.tag(), m.tag());
        assert_eq!(back.tree(), m.tree());
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(dense(&back), dense(&m));
    }
}

#[test]
fn save_and_load() {
    let path = std::env::temp_dir().join(format!("hmat-container-{}.bin", std::process::id()));
    for m in samples().into_iter().step_by(4) {
        m.save(&path).unwrap();
        let back = AnyMatrix::load(&path).unwrap();
        assert_eq!(back.to_bytes(), m.to_bytes());
    }
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn malformed_input_is_rejected() {
    let bytes = samples().swap_remove(0).to_bytes();
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(matches!(AnyMatrix::from_bytes(&bad_magic), Err(Error::Format(_))));
    let mut bad_version = bytes.clone();
    bad_version[4] = 9;
    assert!(AnyMatrix::from_bytes(&bad_version).is_err());
    let mut bad_tag = bytes.clone();
    bad_tag[8] = 7;
    assert!(AnyMatrix::from_bytes(&bad_tag).is_err());
    for cut in [0, 3, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(AnyMatrix::from_bytes(&bytes[..cut]).is_err(), "truncated at {cut}");
    }
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(AnyMatrix::from_bytes(&trailing).is_err());
}
