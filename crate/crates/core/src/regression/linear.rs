//! Least squares for `log CR = a + b z1 + c z2 + d z1 z2 + noise`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Intercept, two slopes, interaction slope, and residual standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub sigma_eps: f64,
}

impl LinearCoeffs {
    pub fn slopes(&self) -> [f64; 3] {
        [self.b, self.c, self.d]
    }

    pub fn eval(&self, z: &[f64; 2]) -> f64 {
        self.a + self.b * z[0] + self.c * z[1] + self.d * z[0] * z[1]
    }
}

/// Design row `[1, z1, z2, z1 z2]`.
pub fn design_row(z: &[f64; 2]) -> [f64; 4] {
    [1.0, z[0], z[1], z[0] * z[1]]
}

pub fn design_matrix(x: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), 4, |i, j| design_row(&x[i])[j])
}

/// Relative singular-value threshold below which the design is singular.
const RANK_TOL: f64 = 1e-10;

pub fn fit_linear(x: &[[f64; 2]], y: &[f64]) -> Result<LinearCoeffs> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("predictor and response lengths differ".into()));
    }
    if x.len() < 5 {
        return Err(Error::TooFewRows { needed: 5, got: x.len() });
    }
    let xm = design_matrix(x);
    let yv = DVector::from_column_slice(y);
    let svd = xm.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= RANK_TOL * smax {
        return Err(Error::SingularDesign);
    }
    let beta = svd.solve(&yv, 0.0).map_err(|_| Error::SingularDesign)?;
    let resid = &yv - &xm * &beta;
    let dof = (x.len() - 4) as f64;
    let sigma_eps = (resid.norm_squared() / dof).sqrt();
    Ok(LinearCoeffs {
        a: beta[0],
        b: beta[1],
        c: beta[2],
        d: beta[3],
        sigma_eps,
    })
}
