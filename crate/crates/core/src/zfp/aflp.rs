//! Adaptive floating point: `m'` mantissa bits from the accuracy, `e_dr`
//! exponent bits from the dynamic range, `1 + m' + e_dr` padded to a
//! multiple of 8.
//!
//! Magnitudes are scaled by `1/v_min` into `[1, v_max/v_min]`, so the FP64
//! exponent is non-negative and only its low bits vary. The stored exponent
//! field is the FP64 biased exponent minus `shift` and is at least one; the
//! all-zero word is reserved for exact zero.

use super::{check_finite, mantissa_bits_for, pack_words, read_word, read_words, word_mask, STRIP};
use crate::bytes::{ByteReader, ByteWriter};
use crate::{Error, Result};

const FP64_MANT: u32 = 52;
const FP64_BIAS: i32 = 1023;
const MAX_EXP_BITS: u32 = 11;

/// Subtracted from the FP64 biased exponent of a scaled value `y ≥ 1`, so
/// the stored exponent of `y ∈ [1, 2)` is 1.
const SHIFT: i32 = FP64_BIAS - 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AflpParams {
    /// Accuracy-derived width `⌈−log₂ ε⌉` before padding.
    pub mant_eps: u32,
    /// Padded mantissa width `m'`.
    pub mant_bits: u32,
    /// Exponent width `e_dr`.
    pub exp_bits: u32,
    /// Multiplier applied to magnitudes before encoding.
    pub scale: f64,
    pub shift: i32,
    /// Values are stored as verbatim FP64 words.
    pub verbatim: bool,
}

impl AflpParams {
    pub fn bits(&self) -> u32 {
        if self.verbatim {
            64
        } else {
            1 + self.mant_bits + self.exp_bits
        }
    }

    pub fn bytes_per_value(&self) -> usize {
        (self.bits() / 8) as usize
    }

    fn with_exp_bits(mant_eps: u32, exp_bits: u32, scale: f64) -> Self {
        let mut mant_bits = mant_eps;
        while !(1 + mant_bits + exp_bits).is_multiple_of(8) {
            mant_bits += 1;
        }
        let verbatim = mant_bits > FP64_MANT || 1 + mant_bits + exp_bits > 64;
        Self { mant_eps, mant_bits, exp_bits, scale, shift: SHIFT, verbatim }
    }

    #[inline(always)]
    fn encode(&self, v: f64) -> u64 {
        if self.verbatim {
            return v.to_bits();
        }
        if v == 0.0 {
            return 0;
        }
        let drop = FP64_MANT - self.mant_bits;
        let mut bits = (v.abs() * self.scale).to_bits();
        if drop > 0 {
            bits += 1u64 << (drop - 1);
        }
        let mant = (bits >> drop) & ((1u64 << self.mant_bits) - 1);
        let exp = ((bits >> FP64_MANT) as i32 - self.shift) as u64;
        let sign = u64::from(v.is_sign_negative());
        (sign << (self.exp_bits + self.mant_bits)) | (exp << self.mant_bits) | mant
    }

    /// Stored exponent of `v` after rounding.
    fn stored_exponent(&self, v: f64) -> i64 {
        let drop = FP64_MANT - self.mant_bits.min(FP64_MANT);
        let mut bits = (v.abs() * self.scale).to_bits();
        if drop > 0 {
            bits += 1u64 << (drop - 1);
        }
        (bits >> FP64_MANT) as i64 - self.shift as i64
    }
}

/// Codec parameters for accuracy `eps` and magnitude range `[v_min, v_max]`.
///
/// `e_dr = ⌈log₂ log₂(v_max/v_min)⌉` clamped to `[1, 11]`, widened by one
/// bit whenever the exponent span after rounding would not fit next to the
/// reserved zero exponent.
pub fn aflp_params(eps: f64, v_min: f64, v_max: f64) -> Result<AflpParams> {
    if !(v_min > 0.0 && v_min <= v_max && v_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid magnitude range [{v_min}, {v_max}]")));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("accuracy must be positive, got {eps}")));
    }
    let mant_eps = mantissa_bits_for(eps).clamp(1, FP64_MANT as i32) as u32;
    let range = (v_max / v_min).log2().log2();
    let mut exp_bits = if range.is_finite() { (range.ceil() as i64).clamp(1, MAX_EXP_BITS as i64) as u32 } else { 1 };
    let mut scale = 1.0 / v_min;
    if v_min * scale < 1.0 {
        scale = scale.next_up();
    }
    if !(v_max * scale).is_finite() {
        return Ok(AflpParams { mant_eps, mant_bits: FP64_MANT, exp_bits: MAX_EXP_BITS, scale: 1.0, shift: SHIFT, verbatim: true });
    }
    loop {
        let p = AflpParams::with_exp_bits(mant_eps, exp_bits, scale);
        if p.verbatim || p.stored_exponent(v_max) < (1i64 << exp_bits) {
            return Ok(p);
        }
        if exp_bits == MAX_EXP_BITS {
            return Ok(AflpParams { verbatim: true, ..p });
        }
        exp_bits += 1;
    }
}

#[derive(Clone, Debug)]
pub struct AflpBuffer {
    params: AflpParams,
    len: usize,
    mask: u64,
    inv_scale: f64,
    payload: Vec<u8>,
}

// The pre-padding width is not serialized, so it takes no part in equality.
impl PartialEq for AflpBuffer {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (&self.params, &other.params);
        (a.mant_bits, a.exp_bits, a.scale, a.shift, a.verbatim) == (b.mant_bits, b.exp_bits, b.scale, b.shift, b.verbatim)
            && self.len == other.len
            && self.payload == other.payload
    }
}

impl AflpBuffer {
    pub fn params(&self) -> &AflpParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub const HEADER_BYTES: usize = 24;

    /// Header plus `count · (1 + m' + e_dr) / 8` payload bytes.
    pub fn stored_bytes(&self) -> usize {
        Self::HEADER_BYTES + self.len * self.params.bytes_per_value()
    }

    fn from_params(params: AflpParams, len: usize, payload: Vec<u8>) -> Self {
        let mask = word_mask(params.bytes_per_value());
        Self { params, len, mask, inv_scale: 1.0 / params.scale, payload }
    }

    #[inline(always)]
    pub fn get(&self, i: usize) -> f64 {
        let word = read_word(&self.payload, i * self.params.bytes_per_value(), self.mask);
        self.decode(word)
    }

    #[inline(always)]
    fn decode(&self, word: u64) -> f64 {
        let p = &self.params;
        if p.verbatim {
            return f64::from_bits(word);
        }
        if word == 0 {
            return 0.0;
        }
        let mant = word & ((1u64 << p.mant_bits) - 1);
        let exp = (word >> p.mant_bits) & ((1u64 << p.exp_bits) - 1);
        let sign = (word >> (p.mant_bits + p.exp_bits)) & 1;
        let bits = (sign << 63) | (((exp as i64 + p.shift as i64) as u64) << FP64_MANT) | (mant << (FP64_MANT - p.mant_bits));
        f64::from_bits(bits) * self.inv_scale
    }

    /// Decodes `out.len()` values starting at `start`.
    #[inline]
    pub fn decode_into(&self, start: usize, out: &mut [f64]) {
        let p = &self.params;
        let nb = p.bytes_per_value();
        let mut words = [0u64; STRIP];
        let mant_mask = (1u64 << p.mant_bits) - 1;
        let exp_mask = (1u64 << p.exp_bits) - 1;
        let shift = p.shift as i64;
        for (c, chunk) in out.chunks_mut(STRIP).enumerate() {
            let w = &mut words[..chunk.len()];
            read_words(&self.payload, nb, start + c * STRIP, w);
            if p.verbatim {
                for (o, &wk) in chunk.iter_mut().zip(w.iter()) {
                    *o = f64::from_bits(wk);
                }
                continue;
            }
            for (o, &wk) in chunk.iter_mut().zip(w.iter()) {
                let mant = wk & mant_mask;
                let exp = (wk >> p.mant_bits) & exp_mask;
                let sign = (wk >> (p.mant_bits + p.exp_bits)) & 1;
                let bits = (sign << 63) | (((exp as i64 + shift) as u64) << FP64_MANT) | (mant << (FP64_MANT - p.mant_bits));
                let v = f64::from_bits(bits) * self.inv_scale;
                *o = if wk == 0 { 0.0 } else { v };
            }
        }
    }

    /// `y[k] += a · value[start + k]`, decoding strips of [`STRIP`] values.
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

    /// `Σ value[start + k] · x[k]`, decoding strips of [`STRIP`] values.
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
        let p = &self.params;
        w.u8(1);
        w.usize(self.len);
        w.u8(p.mant_bits as u8);
        w.u8(p.exp_bits as u8);
        w.u8(u8::from(p.verbatim));
        w.f64(p.scale);
        w.i32(p.shift);
        w.bytes(&self.payload[..self.len * p.bytes_per_value()]);
    }

    /// Reads the fields after the scheme tag.
    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self> {
        let len = r.usize()?;
        let mant_bits = r.u8()? as u32;
        let exp_bits = r.u8()? as u32;
        let verbatim = r.u8()? & 1 == 1;
        let scale = r.f64()?;
        let shift = r.i32()?;
        if !verbatim && (mant_bits > FP64_MANT || exp_bits == 0 || exp_bits > MAX_EXP_BITS || !(1 + mant_bits + exp_bits).is_multiple_of(8)) {
            return Err(Error::Format(format!("invalid AFLP widths m'={mant_bits} e={exp_bits}")));
        }
        let params = AflpParams { mant_eps: mant_bits, mant_bits, exp_bits, scale, shift, verbatim };
        let nb = params.bytes_per_value();
        let bytes = r.take(len.checked_mul(nb).ok_or_else(|| Error::Format("AFLP length overflow".into()))?)?;
        let mut payload = bytes.to_vec();
        payload.extend_from_slice(&[0u8; 8]);
        Ok(Self::from_params(params, len, payload))
    }
}

pub fn aflp_compress(values: &[f64], eps: f64) -> Result<AflpBuffer> {
    check_finite(values)?;
    let (mut vmin, mut vmax) = (f64::INFINITY, 0.0f64);
    for v in values.iter().map(|v| v.abs()).filter(|&v| v > 0.0) {
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    if vmax == 0.0 {
        (vmin, vmax) = (1.0, 1.0);
    }
    let params = aflp_params(eps, vmin, vmax)?;
    let payload = pack_words(values.iter().map(|&v| params.encode(v)), params.bytes_per_value());
    Ok(AflpBuffer::from_params(params, values.len(), payload))
}

pub fn aflp_decompress(buf: &AflpBuffer) -> Vec<f64> {
    let mut out = vec![0.0; buf.len()];
    buf.decode_into(0, &mut out);
    out
}

pub fn aflp_get(buf: &AflpBuffer, i: usize) -> f64 {
    buf.get(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_from_formulas() {
        let p = aflp_params(1e-6, 1.0, 1.0e4).unwrap();
        assert_eq!(p.mant_eps, 20);
        assert_eq!(p.exp_bits, 4);
        assert_eq!(p.mant_bits, 27);
        assert_eq!(p.bits(), 32);

        let flat = aflp_params(1e-6, 3.0, 3.0).unwrap();
        assert_eq!(flat.exp_bits, 1);
        assert_eq!(flat.bits() % 8, 0);

        assert_eq!(aflp_params(2.0, 1.0, 2.0).unwrap().mant_eps, 1);
        assert!(aflp_params(1e-6, 0.0, 1.0).is_err());
    }

    #[test]
    fn exponent_field_grows_at_power_of_two_boundary() {
        // log₂ log₂ 16 = 2 exactly, but the stored exponents 1..=5 need 3 bits
        let p = aflp_params(1e-3, 1.0, 16.0).unwrap();
        assert_eq!(p.exp_bits, 3);
        let buf = aflp_compress(&[1.0, 16.0, -7.5], 1e-3).unwrap();
        assert_eq!(aflp_decompress(&buf), vec![1.0, 16.0, -7.5]);
    }

    #[test]
    fn zeros_are_exact() {
        let buf = aflp_compress(&[0.0; 10], 1e-4).unwrap();
        assert_eq!(aflp_decompress(&buf), vec![0.0; 10]);
        let mixed = aflp_compress(&[0.0, 1.5, -0.0, -2e-3], 1e-4).unwrap();
        let back = aflp_decompress(&mixed);
        assert_eq!(back[0], 0.0);
        assert_eq!(back[2], 0.0);
        assert!((back[1] - 1.5).abs() <= 1.5 * 4.0 * 2f64.powi(-14));
    }

    #[test]
    fn payload_size() {
        let values: Vec<f64> = (0..1000).map(|i| 1.0 + 9999.0 * i as f64 / 999.0).collect();
        let buf = aflp_compress(&values, 1e-6).unwrap();
        assert_eq!(buf.params().bits(), 32);
        assert_eq!(buf.stored_bytes() - AflpBuffer::HEADER_BYTES, 4000);
    }

    #[test]
    fn minimum_value_keeps_stored_exponent_nonzero() {
        let values = [3.0e-7, 1.0e-3, 0.25];
        let buf = aflp_compress(&values, 1e-5).unwrap();
        for (i, v) in values.iter().enumerate() {
            let p = buf.params();
            let word = read_word(&buf.payload, i * p.bytes_per_value(), buf.mask);
            assert!((word >> p.mant_bits) & ((1 << p.exp_bits) - 1) >= 1);
            assert!((buf.get(i) - v).abs() <= v * 4.0 * 2f64.powi(-17));
        }
    }

    #[test]
    fn verbatim_at_full_precision() {
        let values = [1.0 / 3.0, -2.0e100, 1.0e-200];
        let buf = aflp_compress(&values, 1e-17).unwrap();
        assert!(buf.params().verbatim);
        assert_eq!(aflp_decompress(&buf), values.to_vec());
    }

    proptest! {
        #[test]
        fn roundtrip_bound_and_random_access(
            values in prop::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6, -1e-3f64..1e-3], 1..200),
            digits in 1u32..15,
        ) {
            let eps = 10f64.powi(-(digits as i32));
            let buf = aflp_compress(&values, eps).unwrap();
            let m = mantissa_bits_for(eps).clamp(1, 52);
            let back = aflp_decompress(&buf);
            prop_assert_eq!(back.len(), values.len());
            prop_assert_eq!(buf.params().bits() % 8, 0);
            for (i, (v, b)) in values.iter().zip(&back).enumerate() {
                prop_assert!((v - b).abs() <= v.abs() * 4.0 * 2f64.powi(-m));
                prop_assert_eq!(buf.get(i).to_bits(), b.to_bits());
            }
            let mut w = ByteWriter::default();
            buf.write(&mut w);
            prop_assert_eq!(w.buf.len(), buf.stored_bytes());
            let mut r = ByteReader::new(&w.buf[1..]);
            prop_assert_eq!(aflp_decompress(&AflpBuffer::read(&mut r).unwrap()), back);
        }
    }
}
