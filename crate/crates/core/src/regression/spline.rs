//! Penalized cubic B-spline regression with a tensor-product interaction:
//! `y = intercept + s1(z1) + s2(z2) + t(z1, z2)`.
//!
//! Each marginal uses a clamped cubic B-spline basis with three interior
//! knots at the 25/50/75% training quantiles (7 functions, the first dropped
//! for identifiability against the intercept). The interaction is the outer
//! product of the two marginal bases. All basis coefficients carry a ridge
//! penalty whose weight is picked by generalized cross-validation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evaluation::quantile;

pub const INTERIOR_QUANTILES: [f64; 3] = [0.25, 0.5, 0.75];
pub const PENALTY_GRID: [f64; 5] = [1e-6, 1e-4, 1e-2, 1.0, 1e2];
pub const MIN_SPLINE_ROWS: usize = 12;
const DEGREE: usize = 3;

/// Basis for one predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    /// Clamped cubic B-splines over `knots` (boundary knots repeated 4x).
    Spline { knots: Vec<f64> },
    /// Too few distinct values for knots: a single linear column.
    Linear,
}

impl Marginal {
    /// Places knots at training quantiles, or falls back to a linear term
    /// when they would not be strictly increasing inside the data range.
    pub fn from_data(values: &[f64]) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut distinct = values.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() <= 3 {
            return Marginal::Linear;
        }
        let interior: Vec<f64> = INTERIOR_QUANTILES
            .iter()
            .map(|&p| quantile(values, p).expect("non-empty"))
            .collect();
        let mut knots = vec![lo; DEGREE + 1];
        knots.extend_from_slice(&interior);
        knots.extend(std::iter::repeat_n(hi, DEGREE + 1));
        let strictly_inside = knots[DEGREE..knots.len() - DEGREE].windows(2).all(|w| w[0] < w[1]);
        if strictly_inside {
            Marginal::Spline { knots }
        } else {
            Marginal::Linear
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Marginal::Spline { knots } => knots.len() - DEGREE - 2,
            Marginal::Linear => 1,
        }
    }

    /// Training range covered by the basis, if it is a spline.
    pub fn range(&self) -> Option<(f64, f64)> {
        match self {
            Marginal::Spline { knots } => Some((knots[0], knots[knots.len() - 1])),
            Marginal::Linear => None,
        }
    }

    /// Basis values at `x`; splines clamp `x` into the knot range.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        match self {
            Marginal::Spline { knots } => {
                let full = bspline_basis(knots, x);
                full[1..].to_vec()
            }
            Marginal::Linear => vec![x],
        }
    }
}

/// All `knots.len() - 4` cubic B-spline values at `x` (Cox-de Boor).
pub fn bspline_basis(knots: &[f64], x: f64) -> Vec<f64> {
    let n_basis = knots.len() - DEGREE - 1;
    let lo = knots[DEGREE];
    let hi = knots[n_basis];
    let x = x.clamp(lo, hi);
    // span index mu with knots[mu] <= x < knots[mu + 1], last span closed
    let mut mu = DEGREE;
    while mu + 1 < n_basis && knots[mu + 1] <= x {
        mu += 1;
    }
    let mut n = [0.0f64; DEGREE + 1];
    let mut left = [0.0f64; DEGREE + 1];
    let mut right = [0.0f64; DEGREE + 1];
    n[0] = 1.0;
    for j in 1..=DEGREE {
        left[j] = x - knots[mu + 1 - j];
        right[j] = knots[mu + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom != 0.0 { n[r] / denom } else { 0.0 };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    let mut out = vec![0.0; n_basis];
    for (r, v) in n.iter().enumerate() {
        out[mu - DEGREE + r] = *v;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    pub marginals: [Marginal; 2],
    pub coef: Vec<f64>,
    pub penalty: f64,
    pub gcv: f64,
}

fn design_row(marginals: &[Marginal; 2], z: &[f64; 2]) -> Vec<f64> {
    let b0 = marginals[0].eval(z[0]);
    let b1 = marginals[1].eval(z[1]);
    let mut row = Vec::with_capacity(1 + b0.len() + b1.len() + b0.len() * b1.len());
    row.push(1.0);
    row.extend_from_slice(&b0);
    row.extend_from_slice(&b1);
    for u in &b0 {
        for v in &b1 {
            row.push(u * v);
        }
    }
    row
}

impl SplineModel {
    pub fn n_coef(marginals: &[Marginal; 2]) -> usize {
        let (a, b) = (marginals[0].width(), marginals[1].width());
        1 + a + b + a * b
    }

    pub fn eval(&self, z: &[f64; 2]) -> f64 {
        design_row(&self.marginals, z)
            .iter()
            .zip(&self.coef)
            .map(|(x, c)| x * c)
            .sum()
    }
}

struct RidgeSolution {
    coef: DVector<f64>,
    gcv: f64,
}

// Minimizes (1/n)||y - X b||^2 + gamma ||b[1..]||^2.
fn ridge(xm: &DMatrix<f64>, y: &DVector<f64>, gamma: f64) -> Option<RidgeSolution> {
    let n = xm.nrows() as f64;
    let xtx = xm.transpose() * xm / n;
    let mut a = xtx.clone();
    for i in 1..a.nrows() {
        a[(i, i)] += gamma;
    }
    let chol = a.cholesky()?;
    let coef = chol.solve(&(xm.transpose() * y / n));
    let trace = chol.solve(&xtx).trace();
    let rss = (y - xm * &coef).norm_squared();
    let denom = n - trace;
    if denom <= 1e-9 {
        return None;
    }
    Some(RidgeSolution {
        coef,
        gcv: n * rss / (denom * denom),
    })
}

/// Fits the penalized spline model on standardized predictors.
pub fn fit_spline_gam(x: &[[f64; 2]], y: &[f64]) -> Result<SplineModel> {
    fit_spline_gam_with(x, y, &PENALTY_GRID)
}

/// As [`fit_spline_gam`] with an explicit penalty grid.
pub fn fit_spline_gam_with(x: &[[f64; 2]], y: &[f64], penalties: &[f64]) -> Result<SplineModel> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("predictor and response lengths differ".into()));
    }
    if x.len() < MIN_SPLINE_ROWS {
        return Err(Error::TooFewRows { needed: MIN_SPLINE_ROWS, got: x.len() });
    }
    let marginals = [0, 1].map(|j| {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        Marginal::from_data(&col)
    });
    let p = SplineModel::n_coef(&marginals);
    let mut xm = DMatrix::zeros(x.len(), p);
    for (i, z) in x.iter().enumerate() {
        for (j, v) in design_row(&marginals, z).into_iter().enumerate() {
            xm[(i, j)] = v;
        }
    }
    let yv = DVector::from_column_slice(y);
    let mut best: Option<(f64, RidgeSolution)> = None;
    for &gamma in penalties {
        if let Some(sol) = ridge(&xm, &yv, gamma) {
            if best.as_ref().is_none_or(|(_, b)| sol.gcv < b.gcv) {
                best = Some((gamma, sol));
            }
        }
    }
    let (penalty, sol) = best.ok_or(Error::SingularDesign)?;
    Ok(SplineModel {
        marginals,
        coef: sol.coef.iter().copied().collect(),
        penalty,
        gcv: sol.gcv,
    })
}
