use crate::error::{Error, Result};

/// Column-wise standardization `(x - mean) / sd` with population `sd`.
/// Constant columns map to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Columns whose spread is below this are treated as constant.
const CONSTANT_TOL: f64 = 1e-12;

impl StandardScaler {
    /// Fits on row-major data (`rows[i][j]` is predictor `j` of row `i`).
    pub fn fit<const P: usize>(rows: &[[f64; P]]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewRows { needed: 2, got: rows.len() });
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; P];
        let mut stds = vec![0.0; P];
        for j in 0..P {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            means[j] = mean;
            stds[j] = var.sqrt();
        }
        Ok(Self { means, stds })
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.stds[j] <= CONSTANT_TOL * self.means[j].abs().max(1.0)
    }

    pub fn transform<const P: usize>(&self, row: &[f64; P]) -> [f64; P] {
        let mut out = [0.0; P];
        for j in 0..P {
            out[j] = if self.is_constant(j) {
                0.0
            } else {
                (row[j] - self.means[j]) / self.stds[j]
            };
        }
        out
    }

    pub fn transform_all<const P: usize>(&self, rows: &[[f64; P]]) -> Vec<[f64; P]> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Fits a scaler and returns it with the scaled rows.
pub fn standardize<const P: usize>(rows: &[[f64; P]]) -> Result<(StandardScaler, Vec<[f64; P]>)> {
    let scaler = StandardScaler::fit(rows)?;
    let scaled = scaler.transform_all(rows);
    Ok((scaler, scaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn two_point_column() {
        let (_, z) = standardize(&[[1.0], [3.0]]).unwrap();
        assert_eq!(z, vec![[-1.0], [1.0]]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let (s, z) = standardize(&[[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]]).unwrap();
        assert!(s.is_constant(0));
        assert!(!s.is_constant(1));
        assert!(z.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn random_column_recomputed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<[f64; 2]> = (0..100).map(|_| [rng.random::<f64>() * 7.0 - 2.0, rng.random::<f64>()]).collect();
        let (_, z) = standardize(&rows).unwrap();
        for j in 0..2 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / 100.0;
            let sd = (z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 100.0).sqrt();
            assert!(mean.abs() < 1e-10);
            assert!((sd - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn needs_two_rows() {
        assert!(matches!(standardize(&[[1.0]]), Err(Error::TooFewRows { .. })));
    }
}
