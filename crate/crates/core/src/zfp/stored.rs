use nalgebra::DMatrix;

use super::{AflpBuffer, FpxBuffer};
use crate::bytes::{ByteReader, ByteWriter};
use crate::{Error, Result};

/// Decode strip length of the blocked FPX path.
pub const STRIP: usize = 64;

/// A contiguous value array in plain or compressed form.
#[derive(Clone, Debug, PartialEq)]
pub enum StoredValues {
    Plain(Vec<f64>),
    Aflp(AflpBuffer),
    Fpx(FpxBuffer),
}

impl StoredValues {
    pub fn len(&self) -> usize {
        match self {
            StoredValues::Plain(v) => v.len(),
            StoredValues::Aflp(b) => b.len(),
            StoredValues::Fpx(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_compressed(&self) -> bool {
        !matches!(self, StoredValues::Plain(_))
    }

    /// Payload bytes: 8 per value when plain, header plus packed words
    /// otherwise.
    pub fn stored_bytes(&self) -> usize {
        match self {
            StoredValues::Plain(v) => 8 * v.len(),
            StoredValues::Aflp(b) => b.stored_bytes(),
            StoredValues::Fpx(b) => b.stored_bytes(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        match self {
            StoredValues::Plain(v) => v[i],
            StoredValues::Aflp(b) => b.get(i),
            StoredValues::Fpx(b) => b.get(i),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            StoredValues::Plain(v) => v.clone(),
            StoredValues::Aflp(b) => super::aflp_decompress(b),
            StoredValues::Fpx(b) => super::fpx_decompress(b),
        }
    }

    /// `y[k] += a · value[start + k]` for `k < y.len()`.
    #[inline]
    pub fn axpy(&self, start: usize, a: f64, y: &mut [f64]) {
        match self {
            StoredValues::Plain(v) => {
                let n = y.len();
                for (yk, d) in y.iter_mut().zip(&v[start..start + n]) {
                    *yk += d * a;
                }
            }
            StoredValues::Aflp(b) => b.axpy(start, a, y),
            StoredValues::Fpx(b) => b.axpy(start, a, y),
        }
    }

    /// `Σ value[start + k] · x[k]` for `k < x.len()`.
    #[inline]
    pub fn dot(&self, start: usize, x: &[f64]) -> f64 {
        match self {
            StoredValues::Plain(v) => {
                let mut acc = 0.0;
                for (xk, d) in x.iter().zip(&v[start..start + x.len()]) {
                    acc += d * xk;
                }
                acc
            }
            StoredValues::Aflp(b) => b.dot(start, x),
            StoredValues::Fpx(b) => b.dot(start, x),
        }
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        match self {
            StoredValues::Plain(v) => {
                w.u8(0);
                w.usize(v.len());
                for x in v {
                    w.f64(*x);
                }
            }
            StoredValues::Aflp(b) => b.write(w),
            StoredValues::Fpx(b) => b.write(w),
        }
    }

    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self> {
        match r.u8()? {
            0 => {
                let n = r.usize()?;
                if n > r.remaining() / 8 {
                    return Err(Error::Format("plain array exceeds data".into()));
                }
                Ok(StoredValues::Plain((0..n).map(|_| r.f64()).collect::<Result<_>>()?))
            }
            1 => Ok(StoredValues::Aflp(AflpBuffer::read(r)?)),
            2 => Ok(StoredValues::Fpx(FpxBuffer::read(r)?)),
            tag => Err(Error::Format(format!("unknown scheme tag {tag}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    /// One column-major array.
    Whole(StoredValues),
    /// One array per column, each with its own codec parameters.
    Columns(Vec<StoredValues>),
}

/// Column-major matrix whose values may be compressed, either as a whole or
/// column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredMatrix {
    rows: usize,
    cols: usize,
    layout: Layout,
}

impl StoredMatrix {
    pub fn plain(m: &DMatrix<f64>) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), layout: Layout::Whole(StoredValues::Plain(m.as_slice().to_vec())) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, layout: Layout::Whole(StoredValues::Plain(vec![0.0; rows * cols])) }
    }

    pub fn whole(rows: usize, cols: usize, values: StoredValues) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: values.len() });
        }
        Ok(Self { rows, cols, layout: Layout::Whole(values) })
    }

    pub fn from_columns(rows: usize, columns: Vec<StoredValues>) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch { expected: rows, actual: bad.len() });
        }
        Ok(Self { rows, cols: columns.len(), layout: Layout::Columns(columns) })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_compressed(&self) -> bool {
        match &self.layout {
            Layout::Whole(v) => v.is_compressed(),
            Layout::Columns(c) => c.iter().any(StoredValues::is_compressed),
        }
    }

    pub fn is_per_column(&self) -> bool {
        matches!(self.layout, Layout::Columns(_))
    }

    pub fn n_values(&self) -> usize {
        self.rows * self.cols
    }

    pub fn stored_bytes(&self) -> usize {
        match &self.layout {
            Layout::Whole(v) => v.stored_bytes(),
            Layout::Columns(c) => c.iter().map(StoredValues::stored_bytes).sum(),
        }
    }

    /// Bytes this matrix would take as plain f64 values.
    pub fn plain_bytes(&self) -> usize {
        8 * self.n_values()
    }

    #[inline]
    fn column(&self, j: usize) -> (&StoredValues, usize) {
        match &self.layout {
            Layout::Whole(v) => (v, j * self.rows),
            Layout::Columns(c) => (&c[j], 0),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (v, off) = self.column(j);
        v.get(off + i)
    }

    pub fn column_vec(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        let (v, off) = self.column(j);
        v.axpy(off, 1.0, &mut out);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    /// `y += α · A · x`, column by column with on-the-fly decoding.
    #[inline]
    pub fn gemv(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (j, xj) in x.iter().enumerate() {
            let a = alpha * xj;
            let (v, off) = self.column(j);
            v.axpy(off, a, y);
        }
    }

    /// `y += α · Aᵀ · x`.
    #[inline]
    pub fn gemv_t(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for (j, yj) in y.iter_mut().enumerate() {
            let (v, off) = self.column(j);
            *yj += alpha * v.dot(off, x);
        }
    }

    /// `y += α · A · x` for FPX data decoding one value at a time; other
    /// representations use [`Self::gemv`].
    pub fn gemv_scalar(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (j, xj) in x.iter().enumerate() {
            let a = alpha * xj;
            match self.column(j) {
                (StoredValues::Fpx(b), off) => b.axpy_scalar(off, a, y),
                (v, off) => v.axpy(off, a, y),
            }
        }
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.usize(self.rows);
        w.usize(self.cols);
        match &self.layout {
            Layout::Whole(v) => {
                w.u8(0);
                v.write(w);
            }
            Layout::Columns(c) => {
                w.u8(1);
                for v in c {
                    v.write(w);
                }
            }
        }
    }

    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self> {
        let rows = r.usize()?;
        let cols = r.usize()?;
        match r.u8()? {
            0 => Self::whole(rows, cols, StoredValues::read(r)?),
            1 => {
                let columns = (0..cols).map(|_| StoredValues::read(r)).collect::<Result<Vec<_>>>()?;
                Self::from_columns(rows, columns)
            }
            tag => Err(Error::Format(format!("unknown matrix layout {tag}"))),
        }
    }
}
