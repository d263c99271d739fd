//! Prediction-based codec: Lorenzo prediction over reconstructed neighbours,
//! uniform residual quantization with bin width `2 eps`, canonical Huffman.

use super::bits::{unzigzag, zigzag};
use super::huffman::{decode_stream, encode_stream, StreamStats};
use super::bits::ByteCursor;
use crate::error::{Error, Result};

/// Quantizes `value - pred` to the nearest multiple of `2 eps` and returns
/// the bin and the reconstruction. Neighbouring bins are tried when floating
/// point rounding pushes the reconstruction just past the bound.
pub(crate) fn quantize_residual(value: f64, pred: f64, eps: f64) -> (i64, f64) {
    let width = 2.0 * eps;
    let q = ((value - pred) / width).round() as i64;
    let recon = pred + width * q as f64;
    if (value - recon).abs() <= eps {
        return (q, recon);
    }
    for cand in [q - 1, q + 1] {
        let r = pred + width * cand as f64;
        if (value - r).abs() <= eps {
            return (cand, r);
        }
    }
    (q, recon)
}

pub(crate) fn reconstruct(pred: f64, eps: f64, q: i64) -> f64 {
    pred + 2.0 * eps * q as f64
}

// Lorenzo prediction from already reconstructed values; out-of-range
// neighbours take the anchor value (the first sample).
fn predict(recon: &[f64], shape: &[usize], idx: usize, anchor: f64) -> f64 {
    match shape.len() {
        1 => {
            if idx > 0 {
                recon[idx - 1]
            } else {
                anchor
            }
        }
        2 => {
            let n = shape[1];
            let (i, j) = (idx / n, idx % n);
            let at = |di: usize, dj: usize| -> f64 {
                if i >= di && j >= dj {
                    recon[(i - di) * n + (j - dj)]
                } else {
                    anchor
                }
            };
            at(1, 0) + at(0, 1) - at(1, 1)
        }
        _ => {
            let (b, c) = (shape[1], shape[2]);
            let (i, rem) = (idx / (b * c), idx % (b * c));
            let (j, k) = (rem / c, rem % c);
            let at = |di: usize, dj: usize, dk: usize| -> f64 {
                if i >= di && j >= dj && k >= dk {
                    recon[(i - di) * b * c + (j - dj) * c + (k - dk)]
                } else {
                    anchor
                }
            };
            at(1, 0, 0) + at(0, 1, 0) + at(0, 0, 1) - at(1, 1, 0) - at(1, 0, 1) - at(0, 1, 1)
                + at(1, 1, 1)
        }
    }
}

/// Residual bins in raster order (zigzag-mapped), plus the reconstruction.
pub(crate) fn residual_symbols(values: &[f64], shape: &[usize], eps: f64) -> (Vec<u64>, Vec<f64>) {
    let anchor = values.first().copied().unwrap_or(0.0);
    let mut recon = vec![0.0; values.len()];
    let mut symbols = Vec::with_capacity(values.len());
    for (idx, &v) in values.iter().enumerate() {
        let pred = predict(&recon, shape, idx, anchor);
        let (q, r) = quantize_residual(v, pred, eps);
        recon[idx] = r;
        symbols.push(zigzag(q));
    }
    (symbols, recon)
}

pub(crate) fn encode(values: &[f64], shape: &[usize], eps: f64, out: &mut Vec<u8>) -> Result<Vec<StreamStats>> {
    if shape.len() > 3 {
        return Err(Error::InvalidShape {
            shape: shape.to_vec(),
            reason: "predictive codec handles 1 to 3 dimensions".into(),
        });
    }
    let (symbols, _) = residual_symbols(values, shape, eps);
    out.extend_from_slice(&values.first().copied().unwrap_or(0.0).to_le_bytes());
    Ok(vec![encode_stream(&symbols, out)?])
}

pub(crate) fn decode(cur: &mut ByteCursor<'_>, shape: &[usize], eps: f64) -> Result<Vec<f64>> {
    let count: usize = shape.iter().product();
    let anchor = cur.f64()?;
    if !anchor.is_finite() {
        return Err(Error::CorruptStream("non-finite anchor".into()));
    }
    let symbols = decode_stream(cur, count)?;
    let mut recon = vec![0.0; count];
    for idx in 0..count {
        let pred = predict(&recon, shape, idx, anchor);
        recon[idx] = reconstruct(pred, eps, unzigzag(symbols[idx]));
    }
    Ok(recon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorenzo_is_exact_on_bilinear_planes() {
        // f(i,j) = 3 + 2i - j is reproduced exactly by left + up - diag away
        // from the first row and column
        let shape = [5, 6];
        let values: Vec<f64> = (0..30).map(|idx| 3.0 + 2.0 * (idx / 6) as f64 - (idx % 6) as f64).collect();
        for idx in 0..30 {
            if idx / 6 > 0 && idx % 6 > 0 {
                assert_eq!(predict(&values, &shape, idx, 0.0), values[idx]);
            }
        }
        let shape3 = [3, 3, 3];
        let v3: Vec<f64> = (0..27).map(|idx| (idx / 9) as f64 + 2.0 * ((idx / 3) % 3) as f64 + 5.0 * (idx % 3) as f64).collect();
        assert_eq!(predict(&v3, &shape3, 26, 0.0), v3[26]);
    }

    #[test]
    fn residual_bins_round_to_nearest() {
        assert_eq!(quantize_residual(0.35, 0.0, 0.1).0, 2);
        assert_eq!(quantize_residual(-0.35, 0.0, 0.1).0, -2);
        let (q, r) = quantize_residual(1.0, 0.25, 0.1);
        assert_eq!(q, 4);
        assert!((1.0f64 - r).abs() <= 0.1);
    }
}
