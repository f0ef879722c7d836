//! Error-adaptive floating-point storage.
//!
//! * [`aflp`]: adaptive mantissa and exponent widths, padded to whole bytes.
//! * [`fpx`]: byte-truncated IEEE FP32/FP64 with round-to-nearest.
//! * [`valr`]: per-column accuracy for low-rank factors and cluster bases.
//!
//! [`StoredValues`] and [`StoredMatrix`] wrap either plain `f64` data or one
//! of the codecs so kernels can read any of them through one interface.
//!
//! # Buffer layout
//!
//! Every buffer serializes as a little-endian header followed by the packed
//! payload:
//!
//! | bytes   | field                                   |
//! |---------|-----------------------------------------|
//! | 0       | scheme tag: 0 plain f64, 1 AFLP, 2 FPX  |
//! | 1..9    | value count (u64)                       |
//!
//! Plain payloads follow directly as `count` f64 values.
//!
//! AFLP continues with `m'` (u8), `e_dr` (u8), flags (u8, bit 0 = verbatim
//! f64), `scale` (f64) and `shift` (i32): 24 header bytes in total. FPX
//! continues with `e` (u8) and `m` (u8): 11 header bytes.
//!
//! Codec payloads hold `count` words of `w = (1 + m + e) / 8` bytes each,
//! value `i` at byte offset `i·w`, least significant byte first. Inside a
//! word the sign is the most significant bit, followed by the exponent field
//! and the mantissa in the low bits.

pub mod aflp;
pub mod fpx;
mod stored;
pub mod valr;

pub use aflp::{aflp_compress, aflp_decompress, aflp_get, aflp_params, AflpBuffer, AflpParams};
pub use fpx::{fpx_compress, fpx_decompress, fpx_get, fpx_select, fpx_strict, FpxBuffer, FPX_FORMATS};
pub use stored::{StoredMatrix, StoredValues, STRIP};
pub use valr::{valr_bound, valr_compress, valr_compress_basis, valr_decompress, ValrBlock};

use crate::{Error, Result};

/// Floating-point codec for compressed storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Codec {
    Aflp,
    Fpx,
}

impl Codec {
    pub fn name(self) -> &'static str {
        match self {
            Codec::Aflp => "aflp",
            Codec::Fpx => "fpx",
        }
    }
}

/// `⌈−log₂ ε⌉`, the mantissa width needed for relative accuracy `ε`.
pub fn mantissa_bits_for(eps: f64) -> i32 {
    (-eps.log2()).ceil() as i32
}

/// Compresses `values` with per-value relative accuracy `eps`.
pub fn compress(values: &[f64], eps: f64, codec: Codec) -> Result<StoredValues> {
    Ok(match codec {
        Codec::Aflp => StoredValues::Aflp(aflp_compress(values, eps)?),
        Codec::Fpx => StoredValues::Fpx(fpx_compress(values, eps)?),
    })
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// Little-endian word reader over a payload padded by 8 bytes.
#[inline(always)]
pub(crate) fn read_word(payload: &[u8], offset: usize, mask: u64) -> u64 {
    let bytes: [u8; 8] = payload[offset..offset + 8].try_into().expect("payload is padded");
    u64::from_le_bytes(bytes) & mask
}

/// Reads `out.len()` consecutive `nbytes`-wide words starting at word `start`.
/// Dispatching on the width gives the inner loop a constant stride.
#[inline]
pub(crate) fn read_words(payload: &[u8], nbytes: usize, start: usize, out: &mut [u64]) {
    fn run<const NB: usize>(payload: &[u8], start: usize, out: &mut [u64]) {
        let mask = if NB >= 8 { u64::MAX } else { (1u64 << (8 * NB)) - 1 };
        let src = &payload[start * NB..start * NB + out.len() * NB + 8];
        for (k, o) in out.iter_mut().enumerate() {
            let bytes: [u8; 8] = src[k * NB..k * NB + 8].try_into().expect("payload is padded");
            *o = u64::from_le_bytes(bytes) & mask;
        }
    }
    match nbytes {
        1 => run::<1>(payload, start, out),
        2 => run::<2>(payload, start, out),
        3 => run::<3>(payload, start, out),
        4 => run::<4>(payload, start, out),
        5 => run::<5>(payload, start, out),
        6 => run::<6>(payload, start, out),
        7 => run::<7>(payload, start, out),
        _ => run::<8>(payload, start, out),
    }
}

pub(crate) fn pack_words(words: impl ExactSizeIterator<Item = u64>, nbytes: usize) -> Vec<u8> {
    let mut payload = Vec::with_capacity(words.len() * nbytes + 8);
    for w in words {
        payload.extend_from_slice(&w.to_le_bytes()[..nbytes]);
    }
    payload.extend_from_slice(&[0u8; 8]);
    payload
}

pub(crate) fn word_mask(nbytes: usize) -> u64 {
    if nbytes >= 8 {
        u64::MAX
    } else {
        (1u64 << (8 * nbytes)) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mantissa_widths() {
        assert_eq!(mantissa_bits_for(1e-6), 20);
        assert_eq!(mantissa_bits_for(1e-8), 27);
        assert_eq!(mantissa_bits_for(0.5), 1);
        assert_eq!(mantissa_bits_for(1e-4), 14);
    }

    #[test]
    fn non_finite_rejected() {
        for codec in [Codec::Aflp, Codec::Fpx] {
            assert!(matches!(compress(&[1.0, f64::NAN], 1e-4, codec), Err(Error::NonFinite(1))));
            assert!(matches!(compress(&[f64::INFINITY], 1e-4, codec), Err(Error::NonFinite(0))));
        }
    }
}
