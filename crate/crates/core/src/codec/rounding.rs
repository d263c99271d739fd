//! Rounding-based codec: values rounded to the nearest multiple of `2 eps`,
//! the integer multiples split into byte planes, each plane Huffman coded.

use super::bits::{unzigzag, zigzag, ByteCursor};
use super::huffman::{decode_stream, encode_stream, StreamStats};
use super::lorenzo::{quantize_residual, reconstruct};
use crate::error::{Error, Result};

/// Grid multiples of each value (zigzag-mapped).
pub(crate) fn grid_symbols(values: &[f64], eps: f64) -> Vec<u64> {
    values.iter().map(|&v| zigzag(quantize_residual(v, 0.0, eps).0)).collect()
}

/// Number of byte planes needed for the largest symbol (at least one).
pub(crate) fn plane_count(symbols: &[u64]) -> usize {
    let max = symbols.iter().copied().max().unwrap_or(0);
    (((64 - max.leading_zeros()) as usize).div_ceil(8)).max(1)
}

pub(crate) fn byte_plane(symbols: &[u64], plane: usize) -> Vec<u64> {
    symbols.iter().map(|&s| (s >> (8 * plane)) & 0xff).collect()
}

pub(crate) fn encode(values: &[f64], eps: f64, out: &mut Vec<u8>) -> Result<Vec<StreamStats>> {
    let symbols = grid_symbols(values, eps);
    let planes = plane_count(&symbols);
    out.push(planes as u8);
    (0..planes)
        .map(|p| encode_stream(&byte_plane(&symbols, p), out))
        .collect()
}

pub(crate) fn decode(cur: &mut ByteCursor<'_>, count: usize, eps: f64) -> Result<Vec<f64>> {
    let planes = cur.u8()? as usize;
    if planes == 0 || planes > 8 {
        return Err(Error::CorruptStream(format!("{planes} byte planes")));
    }
    let mut symbols = vec![0u64; count];
    for p in 0..planes {
        let plane = decode_stream(cur, count)?;
        for (s, b) in symbols.iter_mut().zip(plane) {
            if b > 0xff {
                return Err(Error::CorruptStream("byte plane symbol out of range".into()));
            }
            *s |= b << (8 * p);
        }
    }
    Ok(symbols.into_iter().map(|s| reconstruct(0.0, eps, unzigzag(s))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planes_needed() {
        assert_eq!(plane_count(&[0, 0]), 1);
        assert_eq!(plane_count(&[255]), 1);
        assert_eq!(plane_count(&[256]), 2);
        assert_eq!(plane_count(&[u64::MAX]), 8);
    }

    #[test]
    fn planes_split_little_endian() {
        let s = [0x0102u64, 0xff];
        assert_eq!(byte_plane(&s, 0), vec![0x02, 0xff]);
        assert_eq!(byte_plane(&s, 1), vec![0x01, 0x00]);
    }
}
