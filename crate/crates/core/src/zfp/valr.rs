//! Variable accuracy per column of low-rank factors and cluster bases.
//!
//! Column `i` of an orthonormal factor is stored with absolute accuracy
//! `δᵢ = δ/σᵢ`, tightened by the error amplification of the respective
//! bound: `1/(2k+1)` for a factor pair, `1/k` for a cluster basis.
//! Both bounds need every column within its `δᵢ`, so FPX requests go
//! through [`fpx_strict`].

use nalgebra::DMatrix;

use super::{compress, fpx_strict, Codec, StoredMatrix, StoredValues};
use crate::Result;

/// Compressed `W̃ · diag(σ) · X̃ᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValrBlock {
    pub w: StoredMatrix,
    pub x: StoredMatrix,
    pub sigma: Vec<f64>,
    /// Column accuracies `δᵢ` actually requested from the codec.
    pub deltas: Vec<f64>,
}

impl ValrBlock {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn stored_bytes(&self) -> usize {
        self.w.stored_bytes() + self.x.stored_bytes() + 8 * self.sigma.len()
    }
}

fn compress_strict(values: &[f64], delta: f64, codec: Codec) -> Result<StoredValues> {
    match codec {
        Codec::Aflp => compress(values, delta, codec),
        Codec::Fpx => compress(values, fpx_strict(delta), codec),
    }
}

fn compress_columns(m: &DMatrix<f64>, keep: &[usize], deltas: &[f64], codec: Codec) -> Result<StoredMatrix> {
    let cols = keep
        .iter()
        .zip(deltas)
        .map(|(&j, &d)| compress_strict(m.column(j).as_slice(), d, codec))
        .collect::<Result<Vec<StoredValues>>>()?;
    StoredMatrix::from_columns(m.nrows(), cols)
}

/// Right-hand side `δ(1 + 2k + δ Σ 1/σᵢ)` of the factor-pair error bound.
pub fn valr_bound(delta: f64, sigma: &[f64]) -> f64 {
    let k = sigma.len() as f64;
    delta * (1.0 + 2.0 * k + delta * sigma.iter().map(|s| 1.0 / s).sum::<f64>())
}

/// Compresses `W Σ Xᵀ` with per-column accuracy `(δ/σᵢ)/(2k+1)`. Columns
/// with `σᵢ = 0` are dropped.
pub fn valr_compress(w: &DMatrix<f64>, x: &DMatrix<f64>, sigma: &[f64], delta: f64, codec: Codec) -> Result<ValrBlock> {
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > 0.0).collect();
    let k = keep.len() as f64;
    let deltas: Vec<f64> = keep.iter().map(|&i| delta / sigma[i] / (2.0 * k + 1.0)).collect();
    Ok(ValrBlock {
        w: compress_columns(w, &keep, &deltas, codec)?,
        x: compress_columns(x, &keep, &deltas, codec)?,
        sigma: keep.iter().map(|&i| sigma[i]).collect(),
        deltas,
    })
}

/// Returns `(W̃ Σ, X̃)`.
pub fn valr_decompress(block: &ValrBlock) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut u = block.w.to_dense();
    for (j, s) in block.sigma.iter().enumerate() {
        u.column_mut(j).scale_mut(*s);
    }
    (u, block.x.to_dense())
}

/// Compresses a cluster basis with per-column accuracy `(δ/σᵢ)/k`, or with
/// uniform accuracy `δ` when no singular values are available.
pub fn valr_compress_basis(basis: &DMatrix<f64>, sigma: Option<&[f64]>, delta: f64, codec: Codec) -> Result<StoredMatrix> {
    let all: Vec<usize> = (0..basis.ncols()).collect();
    match sigma {
        Some(sigma) if sigma.len() == basis.ncols() => {
            let k = sigma.len() as f64;
            let deltas: Vec<f64> = sigma.iter().map(|&s| if s > 0.0 { delta / s / k } else { 1.0 }).collect();
            compress_columns(basis, &all, &deltas, codec)
        }
        _ => StoredMatrix::whole(basis.nrows(), basis.ncols(), compress_strict(basis.as_slice(), delta, codec)?),
    }
}
