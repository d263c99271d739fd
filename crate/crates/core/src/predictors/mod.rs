//! Compressor-agnostic statistics that explain compression ratios.

mod entropy;
mod svd;

pub use entropy::{
    entropy_from_counts, quantize, quantize_values, quantized_entropy, shannon_entropy,
    value_entropy, QuantizedField,
};
pub use svd::{
    hosvd_trunc, svd_trunc, truncation_count, HosvdTrunc, DEFAULT_HOSVD_ENERGY_FRAC,
    DEFAULT_VARIANCE_FRAC,
};

use crate::error::{Error, Result};
use crate::field::{field_stats, ScalarField};

/// Lower bound applied before taking logarithms of predictors.
pub const LOG_FLOOR: f64 = 1e-12;

/// Statistics of one slice at one absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorVector {
    pub q_entropy: f64,
    pub svd_trunc: f64,
    pub sigma: f64,
    pub log_qent: f64,
    pub log_ratio: f64,
    pub eps_abs: f64,
}

impl PredictorVector {
    /// Fills the log columns from the raw statistics.
    pub fn from_parts(q_entropy: f64, svd_trunc: f64, sigma: f64, eps_abs: f64) -> Self {
        Self {
            q_entropy,
            svd_trunc,
            sigma,
            log_qent: q_entropy.max(LOG_FLOOR).ln(),
            log_ratio: (svd_trunc.max(LOG_FLOOR) / sigma.max(LOG_FLOOR)).ln(),
            eps_abs,
        }
    }

    /// The two regression inputs: `(log q-ent, log(svd-trunc / sigma))`.
    pub fn log_predictors(&self) -> [f64; 2] {
        [self.log_qent, self.log_ratio]
    }

    /// Same slice statistics re-evaluated at a different error bound. Only
    /// the quantized entropy depends on the bound.
    pub fn with_q_entropy(&self, q_entropy: f64, eps_abs: f64) -> Self {
        Self::from_parts(q_entropy, self.svd_trunc, self.sigma, eps_abs)
    }
}

/// Correlation statistic of a slice: SVD truncation for 2D, the mean HOSVD
/// mode truncation for 3D.
pub fn correlation_trunc(field: &ScalarField) -> Result<f64> {
    match field.dims() {
        2 => svd_trunc(field, DEFAULT_VARIANCE_FRAC),
        3 => Ok(hosvd_trunc(field, DEFAULT_HOSVD_ENERGY_FRAC)?.aggregate),
        dims => Err(Error::NotTwoDimensional { dims }),
    }
}

pub fn build_predictor_vector(field: &ScalarField, eps_abs: f64) -> Result<PredictorVector> {
    let q_entropy = quantized_entropy(field, eps_abs)?;
    let trunc = correlation_trunc(field)?;
    let sigma = field_stats(field)?.stddev;
    Ok(PredictorVector::from_parts(q_entropy, trunc, sigma, eps_abs))
}

/// Predictors for one slice at several error bounds; the correlation
/// statistic is computed once.
pub fn predictor_vectors(field: &ScalarField, eps_list: &[f64]) -> Result<Vec<PredictorVector>> {
    let trunc = correlation_trunc(field)?;
    let sigma = field_stats(field)?.stddev;
    eps_list
        .iter()
        .map(|&eps| Ok(PredictorVector::from_parts(quantized_entropy(field, eps)?, trunc, sigma, eps)))
        .collect()
}

/// Header of the delimited predictor table.
pub const PREDICTOR_HEADER: &str = "slice_id,eps_abs,q_entropy,svd_trunc,sigma,log_qent,log_ratio";

/// A predictor vector tagged with the slice it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorRow {
    pub slice_id: String,
    pub vector: PredictorVector,
}

impl PredictorRow {
    pub fn to_line(&self) -> String {
        let v = &self.vector;
        format!(
            "{},{},{},{},{},{},{}",
            self.slice_id, v.eps_abs, v.q_entropy, v.svd_trunc, v.sigma, v.log_qent, v.log_ratio
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.trim().split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Parse(format!("predictor row needs 7 columns: `{line}`")));
        }
        let num = |i: usize| -> Result<f64> {
            cols[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{}` in `{line}`", cols[i])))
        };
        Ok(Self {
            slice_id: cols[0].to_string(),
            vector: PredictorVector {
                eps_abs: num(1)?,
                q_entropy: num(2)?,
                svd_trunc: num(3)?,
                sigma: num(4)?,
                log_qent: num(5)?,
                log_ratio: num(6)?,
            },
        })
    }
}

pub fn write_predictor_table(rows: &[PredictorRow]) -> String {
    let mut out = String::from(PREDICTOR_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn parse_predictor_table(text: &str) -> Result<Vec<PredictorRow>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("slice_id"))
        .map(PredictorRow::parse_line)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_floors_log_qent() {
        let f = ScalarField::new(vec![0.25; 16], vec![4, 4]).unwrap();
        let p = build_predictor_vector(&f, 1e-3).unwrap();
        assert_eq!(p.q_entropy, 0.0);
        assert_eq!(p.log_qent, LOG_FLOOR.ln());
        assert!(p.log_ratio.is_finite());
    }

    #[test]
    fn ratio_arithmetic() {
        let p = PredictorVector::from_parts(3.0, 0.5, 2.0, 1e-3);
        assert!((p.log_ratio - 0.25f64.ln()).abs() < 1e-15);
        assert!((p.log_qent - 3.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn three_dimensional_uses_hosvd() {
        let v: Vec<f64> = (0..64).map(|i| ((i * 7) % 13) as f64).collect();
        let f = ScalarField::new(v, vec![4, 4, 4]).unwrap();
        let p = build_predictor_vector(&f, 0.5).unwrap();
        let h = hosvd_trunc(&f, 0.9).unwrap();
        assert_eq!(p.svd_trunc, h.aggregate);
    }

    #[test]
    fn row_roundtrip() {
        let row = PredictorRow {
            slice_id: "s3".into(),
            vector: PredictorVector::from_parts(7.25, 0.3125, 0.987654321, 1e-4),
        };
        let table = write_predictor_table(std::slice::from_ref(&row));
        assert_eq!(parse_predictor_table(&table).unwrap(), vec![row]);
        assert!(PredictorRow::parse_line("a,1,2").is_err());
    }
}
