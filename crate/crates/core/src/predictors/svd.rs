//! Low-rank truncation levels: the fraction of singular values needed to
//! capture a given share of a slice's energy.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const DEFAULT_VARIANCE_FRAC: f64 = 0.99;
pub const DEFAULT_HOSVD_ENERGY_FRAC: f64 = 0.90;

/// Smallest `k` such that the first `k` squared singular values (sorted
/// descending) reach `frac` of the total. Returns at least 1.
pub fn truncation_count(singular_values: &[f64], frac: f64) -> usize {
    let mut energies: Vec<f64> = singular_values.iter().map(|s| s * s).collect();
    energies.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = energies.iter().sum();
    if !(total > 0.0) {
        return 1;
    }
    // relative slack so frac = 1 selects the numerical rank
    let threshold = frac * total - 1e-12 * total;
    let mut cum = 0.0;
    for (i, e) in energies.iter().enumerate() {
        cum += e;
        if cum >= threshold {
            return i + 1;
        }
    }
    energies.len()
}

fn check_frac(frac: f64) -> Result<()> {
    if frac > 0.0 && frac <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("energy fraction {frac} not in (0, 1]")))
    }
}

/// Fraction of singular values of the column-mean-corrected slice needed to
/// recover `variance_frac` of its total variance. A constant slice returns
/// `1 / min(m, n)`.
pub fn svd_trunc(field: &ScalarField, variance_frac: f64) -> Result<f64> {
    if field.dims() != 2 {
        return Err(Error::NotTwoDimensional { dims: field.dims() });
    }
    check_frac(variance_frac)?;
    let (m, n) = (field.shape()[0], field.shape()[1]);
    if m.min(n) < 2 {
        return Err(Error::DegenerateShape(field.shape().to_vec()));
    }
    let mut x = DMatrix::from_row_slice(m, n, field.values());
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let sv = x.singular_values();
    let k = truncation_count(sv.as_slice(), variance_frac);
    Ok(k as f64 / m.min(n) as f64)
}

/// Per-mode truncation levels of a 3D tensor plus their arithmetic mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HosvdTrunc {
    pub modes: [f64; 3],
    pub aggregate: f64,
}

/// Unfolds each mode (mode fibers as columns, no mean correction) and keeps
/// the singular values whose squares reach `energy_frac` of the total.
pub fn hosvd_trunc(field: &ScalarField, energy_frac: f64) -> Result<HosvdTrunc> {
    if field.dims() != 3 {
        return Err(Error::NotThreeDimensional { dims: field.dims() });
    }
    check_frac(energy_frac)?;
    let shape = field.shape();
    if shape.iter().any(|&e| e < 2) {
        return Err(Error::DegenerateShape(shape.to_vec()));
    }
    let mut modes = [0.0; 3];
    for (mode, slot) in modes.iter_mut().enumerate() {
        let rows = shape[mode];
        let cols = field.len() / rows;
        // Singular values of the unfolding are square roots of the Gram
        // matrix eigenvalues; the Gram matrix is only rows x rows.
        let gram = mode_gram(field, mode);
        let eig = gram.symmetric_eigenvalues();
        let sv: Vec<f64> = eig.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let k = truncation_count(&sv, energy_frac);
        *slot = k as f64 / rows.min(cols) as f64;
    }
    let aggregate = modes.iter().sum::<f64>() / 3.0;
    Ok(HosvdTrunc { modes, aggregate })
}

// G = A A^T where A is the mode-`mode` unfolding.
fn mode_gram(field: &ScalarField, mode: usize) -> DMatrix<f64> {
    let shape = field.shape();
    let v = field.values();
    let rows = shape[mode];
    let mut gram = DMatrix::<f64>::zeros(rows, rows);
    // gather fibers: row r holds every element whose mode index equals r
    let fibers: Vec<Vec<f64>> = (0..rows).map(|r| mode_row(v, shape, mode, r)).collect();
    for i in 0..rows {
        for j in i..rows {
            let dot: f64 = fibers[i].iter().zip(&fibers[j]).map(|(a, b)| a * b).sum();
            gram[(i, j)] = dot;
            gram[(j, i)] = dot;
        }
    }
    gram
}

fn mode_row(v: &[f64], shape: &[usize], mode: usize, r: usize) -> Vec<f64> {
    let (a, b, c) = (shape[0], shape[1], shape[2]);
    let mut out = Vec::with_capacity(v.len() / shape[mode]);
    match mode {
        0 => out.extend_from_slice(&v[r * b * c..(r + 1) * b * c]),
        1 => {
            for i in 0..a {
                out.extend_from_slice(&v[i * b * c + r * c..i * b * c + (r + 1) * c]);
            }
        }
        _ => {
            for i in 0..a {
                for j in 0..b {
                    out.push(v[i * b * c + j * c + r]);
                }
            }
        }
    }
    out
}
