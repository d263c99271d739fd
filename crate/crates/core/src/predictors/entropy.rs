//! Shannon entropy and the quantized entropy of a field at an error bound.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Field values mapped to bins of width `eps_abs` with floor semantics,
/// `bin = floor(value / eps_abs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedField {
    pub bins: Vec<i64>,
    pub eps_abs: f64,
}

impl QuantizedField {
    pub fn reconstruct(&self) -> Vec<f64> {
        self.bins.iter().map(|&b| b as f64 * self.eps_abs).collect()
    }
}

pub fn quantize(field: &ScalarField, eps_abs: f64) -> Result<QuantizedField> {
    quantize_values(field.values(), eps_abs)
}

pub fn quantize_values(values: &[f64], eps_abs: f64) -> Result<QuantizedField> {
    if !(eps_abs > 0.0) || !eps_abs.is_finite() {
        return Err(Error::NonPositiveEps(eps_abs));
    }
    let bins = values.iter().map(|&v| (v / eps_abs).floor() as i64).collect();
    Ok(QuantizedField { bins, eps_abs })
}

/// Entropy in bits per symbol computed from symbol counts.
pub fn entropy_from_counts<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// `H = -sum p_s log2 p_s` over the distinct symbols of the sequence.
pub fn shannon_entropy<T: Hash + Eq>(symbols: &[T]) -> Result<f64> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for s in symbols {
        *counts.entry(s).or_default() += 1;
    }
    Ok(entropy_from_counts(counts.into_values()))
}

/// Entropy of `floor(value / eps_abs)` over the field.
pub fn quantized_entropy(field: &ScalarField, eps_abs: f64) -> Result<f64> {
    let q = quantize(field, eps_abs)?;
    shannon_entropy(&q.bins)
}

/// Entropy of the raw value multiset (each distinct bit pattern is a symbol).
pub fn value_entropy(field: &ScalarField) -> Result<f64> {
    let bits: Vec<u64> = field.values().iter().map(|v| v.to_bits()).collect();
    shannon_entropy(&bits)
}
