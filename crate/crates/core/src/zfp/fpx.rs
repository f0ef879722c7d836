//! Byte-aligned truncations of IEEE FP32 (8 exponent bits) and FP64
//! (11 exponent bits), rounded to nearest at the last kept mantissa bit.
//!
//! The 8-bit formats narrow to FP32 first, so values are rounded twice; the
//! combined relative error stays below `2^−m` for every row of the format
//! table.

use super::{check_finite, mantissa_bits_for, pack_words, read_word, read_words, word_mask, STRIP};
use crate::bytes::{ByteReader, ByteWriter};
use crate::{Error, Result};

/// `(max ⌈−log₂ ε⌉, e, m)` rows of the format table.
pub const FPX_FORMATS: [(i32, u32, u32); 7] = [
    (10, 8, 7),
    (15, 8, 15),
    (23, 8, 23),
    (28, 11, 28),
    (36, 11, 36),
    (44, 11, 44),
    (52, 11, 52),
];

/// Format `(e, m)` for accuracy `eps`: the table row containing `⌈−log₂ ε⌉`.
/// Accuracies beyond FP64 resolution map to the full FP64 row.
pub fn fpx_select(eps: f64) -> (u32, u32) {
    let need = mantissa_bits_for(eps);
    FPX_FORMATS.iter().find(|&&(hi, _, _)| need <= hi).map_or((11, 52), |&(_, e, m)| (e, m))
}

/// Accuracy to request from [`fpx_compress`] so every value stays within
/// `eps` relative: `eps` itself, unless its table row carries fewer mantissa
/// bits than `⌈−log₂ ε⌉` (the first row, for needs 8 to 10), in which case
/// the start of the next row.
pub fn fpx_strict(eps: f64) -> f64 {
    let need = mantissa_bits_for(eps);
    match FPX_FORMATS.iter().position(|&(hi, _, _)| need <= hi) {
        Some(i) if (FPX_FORMATS[i].2 as i32) < need => 2f64.powi(-(FPX_FORMATS[i].0 + 1)),
        _ => eps,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FpxBuffer {
    exp_bits: u32,
    mant_bits: u32,
    len: usize,
    mask: u64,
    payload: Vec<u8>,
}

impl FpxBuffer {
    pub const HEADER_BYTES: usize = 11;

    pub fn format(&self) -> (u32, u32) {
        (self.exp_bits, self.mant_bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bytes_per_value(&self) -> usize {
        ((1 + self.exp_bits + self.mant_bits) / 8) as usize
    }

    pub fn stored_bytes(&self) -> usize {
        Self::HEADER_BYTES + self.len * self.bytes_per_value()
    }

    fn new(exp_bits: u32, mant_bits: u32, len: usize, payload: Vec<u8>) -> Self {
        let mask = word_mask(((1 + exp_bits + mant_bits) / 8) as usize);
        Self { exp_bits, mant_bits, len, mask, payload }
    }

    #[inline(always)]
    fn decode(&self, word: u64) -> f64 {
        if self.exp_bits == 8 {
            f32::from_bits((word as u32) << (23 - self.mant_bits)) as f64
        } else {
            f64::from_bits(word << (52 - self.mant_bits))
        }
    }

    #[inline(always)]
    pub fn get(&self, i: usize) -> f64 {
        self.decode(read_word(&self.payload, i * self.bytes_per_value(), self.mask))
    }

    #[inline]
    pub fn decode_into(&self, start: usize, out: &mut [f64]) {
        let mut words = [0u64; STRIP];
        for (c, chunk) in out.chunks_mut(STRIP).enumerate() {
            let w = &mut words[..chunk.len()];
            read_words(&self.payload, self.bytes_per_value(), start + c * STRIP, w);
            if self.exp_bits == 8 {
                let shift = 23 - self.mant_bits;
                for (o, &wk) in chunk.iter_mut().zip(w.iter()) {
                    *o = f32::from_bits((wk as u32) << shift) as f64;
                }
            } else {
                let shift = 52 - self.mant_bits;
                for (o, &wk) in chunk.iter_mut().zip(w.iter()) {
                    *o = f64::from_bits(wk << shift);
                }
            }
        }
    }

    /// `y[k] += a · value[start + k]` decoding one value at a time.
    #[inline]
    pub fn axpy_scalar(&self, start: usize, a: f64, y: &mut [f64]) {
        let nb = self.bytes_per_value();
        for (k, yk) in y.iter_mut().enumerate() {
            *yk += self.decode(read_word(&self.payload, (start + k) * nb, self.mask)) * a;
        }
    }

    /// Same as [`Self::axpy_scalar`], decoding strips of [`STRIP`] values
    /// into a stack buffer first.
    #[inline]
    pub fn axpy(&self, start: usize, a: f64, y: &mut [f64]) {
        let mut strip = [0.0f64; STRIP];
        for (c, chunk) in y.chunks_mut(STRIP).enumerate() {
            let buf = &mut strip[..chunk.len()];
            self.decode_into(start + c * STRIP, buf);
            for (yk, d) in chunk.iter_mut().zip(buf.iter()) {
                *yk += d * a;
            }
        }
    }

    #[inline]
    pub fn dot(&self, start: usize, x: &[f64]) -> f64 {
        let mut strip = [0.0f64; STRIP];
        let mut acc = 0.0;
        for (c, chunk) in x.chunks(STRIP).enumerate() {
            let buf = &mut strip[..chunk.len()];
            self.decode_into(start + c * STRIP, buf);
            for (xk, d) in chunk.iter().zip(buf.iter()) {
                acc += d * xk;
            }
        }
        acc
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.u8(2);
        w.usize(self.len);
        w.u8(self.exp_bits as u8);
        w.u8(self.mant_bits as u8);
        w.bytes(&self.payload[..self.len * self.bytes_per_value()]);
    }

    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self> {
        let len = r.usize()?;
        let exp_bits = r.u8()? as u32;
        let mant_bits = r.u8()? as u32;
        if !FPX_FORMATS.iter().any(|&(_, e, m)| e == exp_bits && m == mant_bits) {
            return Err(Error::Format(format!("unknown FPX format e={exp_bits} m={mant_bits}")));
        }
        let nb = ((1 + exp_bits + mant_bits) / 8) as usize;
        let bytes = r.take(len.checked_mul(nb).ok_or_else(|| Error::Format("FPX length overflow".into()))?)?;
        let mut payload = bytes.to_vec();
        payload.extend_from_slice(&[0u8; 8]);
        Ok(Self::new(exp_bits, mant_bits, len, payload))
    }
}

fn encode32(v: f64, mant_bits: u32, index: usize) -> Result<u64> {
    let f = v as f32;
    let drop = 23 - mant_bits;
    let mut bits = f.to_bits();
    if drop > 0 {
        bits += 1 << (drop - 1);
    }
    if !f.is_finite() || (bits >> 23) & 0xff == 0xff {
        return Err(Error::Overflow { index, value: v });
    }
    Ok((bits >> drop) as u64)
}

fn encode64(v: f64, mant_bits: u32, index: usize) -> Result<u64> {
    let drop = 52 - mant_bits;
    let mut bits = v.to_bits();
    if drop > 0 {
        bits += 1 << (drop - 1);
    }
    if (bits >> 52) & 0x7ff == 0x7ff {
        return Err(Error::Overflow { index, value: v });
    }
    Ok(bits >> drop)
}

pub fn fpx_compress(values: &[f64], eps: f64) -> Result<FpxBuffer> {
    check_finite(values)?;
    let (e, m) = fpx_select(eps);
    let words = values
        .iter()
        .enumerate()
        .map(|(i, &v)| if e == 8 { encode32(v, m, i) } else { encode64(v, m, i) })
        .collect::<Result<Vec<u64>>>()?;
    let nb = ((1 + e + m) / 8) as usize;
    Ok(FpxBuffer::new(e, m, values.len(), pack_words(words.into_iter(), nb)))
}

pub fn fpx_decompress(buf: &FpxBuffer) -> Vec<f64> {
    let mut out = vec![0.0; buf.len()];
    buf.decode_into(0, &mut out);
    out
}

pub fn fpx_get(buf: &FpxBuffer, i: usize) -> f64 {
    buf.get(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn selection_table() {
        assert_eq!(fpx_select(1e-6), (8, 23));
        assert_eq!(fpx_select(1e-8), (11, 28));
        assert_eq!(fpx_select(0.5), (8, 7));
        assert_eq!(fpx_select(2.0), (8, 7));
        assert_eq!(fpx_select(1e-20), (11, 52));
        // upper and lower ends of every row
        let rows = [(0, 10, (8, 7)), (11, 15, (8, 15)), (16, 23, (8, 23)), (24, 28, (11, 28)), (29, 36, (11, 36)), (37, 44, (11, 44)), (45, 52, (11, 52))];
        for (lo, hi, fmt) in rows {
            for need in [lo.max(1), hi] {
                assert_eq!(fpx_select(2f64.powi(-need)), fmt, "need {need}");
            }
        }
    }

    #[test]
    fn strict_requests_skip_the_short_row() {
        assert_eq!(fpx_strict(1e-6), 1e-6);
        assert_eq!(fpx_strict(0.01), 0.01);
        for need in 8..=10 {
            let eps = 2f64.powi(-need);
            assert_eq!(fpx_select(fpx_strict(eps)), (8, 15));
        }
        for need in 0..=52 {
            let eps = 2f64.powi(-need);
            assert!(fpx_select(fpx_strict(eps)).1 as i32 >= need);
        }
    }

    #[test]
    fn byte_widths() {
        for (eps, nb) in [(1e-6, 4), (1e-8, 5), (0.5, 2), (1e-4, 3), (1e-10, 6), (1e-12, 7), (1e-15, 8)] {
            let buf = fpx_compress(&[1.0, 2.0], eps).unwrap();
            assert_eq!(buf.bytes_per_value(), nb, "eps {eps}");
            assert_eq!(buf.stored_bytes(), FpxBuffer::HEADER_BYTES + 2 * nb);
        }
    }

    #[test]
    fn exact_cases() {
        for eps in [0.5, 1e-4, 1e-6, 1e-8, 1e-12, 1e-16] {
            let buf = fpx_compress(&[1.5, 0.0, -0.75, 1.0], eps).unwrap();
            assert_eq!(fpx_decompress(&buf), vec![1.5, 0.0, -0.75, 1.0]);
        }
        let full = fpx_compress(&[std::f64::consts::PI, 1e-300], 1e-17).unwrap();
        assert_eq!(fpx_decompress(&full), vec![std::f64::consts::PI, 1e-300]);
    }

    #[test]
    fn narrow_overflow() {
        assert!(matches!(fpx_compress(&[1.0, 4e38], 1e-3), Err(Error::Overflow { index: 1, .. })));
        assert!(fpx_compress(&[4e38], 1e-10).is_ok());
    }

    #[test]
    fn strip_and_scalar_paths_agree() {
        let values: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64 - 50.0) / 7.0).collect();
        let buf = fpx_compress(&values, 1e-5).unwrap();
        let mut a = vec![0.25; 200];
        let mut b = a.clone();
        buf.axpy(0, 1.75, &mut a);
        buf.axpy_scalar(0, 1.75, &mut b);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    proptest! {
        #[test]
        fn roundtrip_bound(values in prop::collection::vec(-1e30f64..1e30, 1..100), row in 0usize..7) {
            let (need, _, m) = FPX_FORMATS[row];
            let eps = 2f64.powi(-need);
            let buf = fpx_compress(&values, eps).unwrap();
            for (i, v) in values.iter().enumerate() {
                let b = buf.get(i);
                prop_assert!((v - b).abs() <= v.abs() * 2f64.powi(-(m as i32)));
            }
            let mut w = ByteWriter::default();
            buf.write(&mut w);
            prop_assert_eq!(w.buf.len(), buf.stored_bytes());
            let back = FpxBuffer::read(&mut ByteReader::new(&w.buf[1..])).unwrap();
            prop_assert_eq!(fpx_decompress(&back), fpx_decompress(&buf));
        }
    }
}
