//! L1-penalized least squares on the interaction design, solved by cyclic
//! coordinate descent with warm starts along a descending lambda path.
//!
//! Objective (glmnet scaling, unpenalized intercept, columns standardized
//! internally): `(1/2N) ||y - a - X b||^2 + lambda ||b~||_1` where `b~` are
//! the coefficients of the unit-variance columns.

use super::linear::{design_row, LinearCoeffs};
use crate::error::{Error, Result};
use crate::evaluation::kfold_split;

const MAX_SWEEPS: usize = 100_000;
const TOL: f64 = 1e-13;

/// Names of the three penalized design columns, in order.
pub const SLOPE_NAMES: [&str; 3] = ["q-ent", "ratio", "interaction"];

struct Centered {
    cols: [Vec<f64>; 3],
    means: [f64; 3],
    scales: [f64; 3],
    y: Vec<f64>,
    y_mean: f64,
}

fn center(x: &[[f64; 2]], y: &[f64]) -> Centered {
    let n = x.len() as f64;
    let rows: Vec<[f64; 4]> = x.iter().map(design_row).collect();
    let mut cols: [Vec<f64>; 3] = Default::default();
    let mut means = [0.0; 3];
    let mut scales = [0.0; 3];
    for j in 0..3 {
        let c: Vec<f64> = rows.iter().map(|r| r[j + 1]).collect();
        let mean = c.iter().sum::<f64>() / n;
        let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        means[j] = mean;
        scales[j] = sd;
        cols[j] = if sd > 1e-12 {
            c.iter().map(|v| (v - mean) / sd).collect()
        } else {
            vec![0.0; c.len()]
        };
    }
    let y_mean = y.iter().sum::<f64>() / n;
    Centered {
        cols,
        means,
        scales,
        y: y.iter().map(|v| v - y_mean).collect(),
        y_mean,
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smallest lambda at which every slope is zero.
pub fn lambda_max(x: &[[f64; 2]], y: &[f64]) -> f64 {
    let c = center(x, y);
    let n = x.len() as f64;
    c.cols
        .iter()
        .map(|col| (col.iter().zip(&c.y).map(|(a, b)| a * b).sum::<f64>() / n).abs())
        .fold(0.0, f64::max)
}

/// 100 values log-spaced from `lambda_max` down to `1e-4 lambda_max`.
pub fn default_lambda_grid(x: &[[f64; 2]], y: &[f64]) -> Vec<f64> {
    let top = lambda_max(x, y);
    if !(top > 0.0) {
        return vec![0.0];
    }
    crate::synth::log_spaced(top, top * 1e-4, 100)
}

fn check_inputs(x: &[[f64; 2]], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("predictor and response lengths differ".into()));
    }
    if x.len() < 5 {
        return Err(Error::TooFewRows { needed: 5, got: x.len() });
    }
    Ok(())
}

/// Coefficients `[a, b, c, d]` on the design scale for every lambda, in the
/// order given.
pub fn lasso_path(x: &[[f64; 2]], y: &[f64], lambdas: &[f64]) -> Result<Vec<[f64; 4]>> {
    check_inputs(x, y)?;
    if lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidParameter("lambda must be non-negative".into()));
    }
    let c = center(x, y);
    let n = x.len() as f64;
    let mut beta = [0.0f64; 3];
    let mut resid = c.y.clone();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        for _ in 0..MAX_SWEEPS {
            let mut max_delta = 0.0f64;
            for j in 0..3 {
                if c.scales[j] <= 1e-12 {
                    continue;
                }
                let col = &c.cols[j];
                let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n + beta[j];
                let new = soft_threshold(rho, lambda);
                let delta = new - beta[j];
                if delta != 0.0 {
                    for (r, a) in resid.iter_mut().zip(col) {
                        *r -= delta * a;
                    }
                    beta[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if max_delta < TOL {
                break;
            }
        }
        let mut coef = [0.0; 4];
        let mut intercept = c.y_mean;
        for j in 0..3 {
            let b = if c.scales[j] > 1e-12 { beta[j] / c.scales[j] } else { 0.0 };
            coef[j + 1] = b;
            intercept -= b * c.means[j];
        }
        coef[0] = intercept;
        out.push(coef);
    }
    Ok(out)
}

fn eval(coef: &[f64; 4], z: &[f64; 2]) -> f64 {
    let r = design_row(z);
    (0..4).map(|i| coef[i] * r[i]).sum()
}

/// Result of a cross-validated LASSO fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coeffs: LinearCoeffs,
    pub lambda: f64,
    /// Mean held-out squared error per lambda of the grid.
    pub cv_error: Vec<(f64, f64)>,
}

/// Fits along `lambda_grid` (sorted descending internally) and keeps the
/// lambda with the smallest `k`-fold cross-validated squared error. A
/// single-value grid skips cross-validation.
pub fn fit_lasso(x: &[[f64; 2]], y: &[f64], lambda_grid: &[f64], k: usize, seed: u64) -> Result<LassoFit> {
    check_inputs(x, y)?;
    if lambda_grid.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    let mut grid = lambda_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut cv_error = Vec::new();
    let lambda = if grid.len() == 1 {
        grid[0]
    } else {
        let folds = kfold_split(x.len(), k, seed)?;
        let mut sse = vec![0.0; grid.len()];
        for f in 0..folds.k {
            let (train, test) = folds.split(f);
            let xt: Vec<[f64; 2]> = train.iter().map(|&i| x[i]).collect();
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let path = lasso_path(&xt, &yt, &grid)?;
            for (g, coef) in path.iter().enumerate() {
                sse[g] += test.iter().map(|&i| (y[i] - eval(coef, &x[i])).powi(2)).sum::<f64>();
            }
        }
        let n = x.len() as f64;
        cv_error = grid.iter().zip(&sse).map(|(&l, &s)| (l, s / n)).collect();
        let best = cv_error
            .iter()
            .enumerate()
            .fold(0, |best, (i, e)| if e.1 < cv_error[best].1 { i } else { best });
        grid[best]
    };
    // warm-started path down to the chosen lambda
    let upto: Vec<f64> = grid.iter().copied().filter(|&l| l >= lambda).collect();
    let coef = *lasso_path(x, y, &upto)?.last().expect("non-empty path");
    let active = coef[1..].iter().filter(|b| **b != 0.0).count();
    let rss: f64 = x.iter().zip(y).map(|(z, t)| (t - eval(&coef, z)).powi(2)).sum();
    let dof = (x.len() - 1 - active).max(1) as f64;
    Ok(LassoFit {
        coeffs: LinearCoeffs {
            a: coef[0],
            b: coef[1],
            c: coef[2],
            d: coef[3],
            sigma_eps: (rss / dof).sqrt(),
        },
        lambda,
        cv_error,
    })
}

/// One entry of a predictor-importance table.
#[derive(Debug, Clone, PartialEq)]
pub struct Importance {
    pub predictor: &'static str,
    pub magnitude: f64,
    pub significant: bool,
}

/// Absolute slopes in descending order; zero slopes are insignificant.
pub fn importance_from_slopes(slopes: [f64; 3]) -> Vec<Importance> {
    let mut out: Vec<Importance> = SLOPE_NAMES
        .iter()
        .zip(slopes)
        .map(|(&predictor, b)| Importance {
            predictor,
            magnitude: b.abs(),
            significant: b != 0.0,
        })
        .collect();
    out.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::linear::fit_linear;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn data(n: usize, seed: u64, coef: [f64; 4], noise: f64) -> (Vec<[f64; 2]>, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nd = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let x: Vec<[f64; 2]> = (0..n).map(|_| [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)]).collect();
        let y = x
            .iter()
            .map(|z| eval(&coef, z) + if noise > 0.0 { nd.sample(&mut rng) } else { 0.0 })
            .collect();
        (x, y)
    }

    #[test]
    fn zero_lambda_is_least_squares() {
        let (x, y) = data(60, 1, [1.0, 0.7, -0.4, 0.2], 0.1);
        let ols = fit_linear(&x, &y).unwrap();
        let fit = fit_lasso(&x, &y, &[0.0], 5, 0).unwrap();
        for (a, b) in [fit.coeffs.a, fit.coeffs.b, fit.coeffs.c, fit.coeffs.d].iter().zip([ols.a, ols.b, ols.c, ols.d]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn lambda_max_kills_every_slope() {
        let (x, y) = data(50, 2, [0.3, 1.0, 0.5, -0.5], 0.2);
        let top = lambda_max(&x, &y);
        for l in [top, top * 1.5] {
            let fit = fit_lasso(&x, &y, &[l], 5, 0).unwrap();
            assert_eq!(fit.coeffs.slopes(), [0.0; 3]);
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            assert!((fit.coeffs.a - mean).abs() < 1e-12);
        }
        let below = lasso_path(&x, &y, &[top * 0.95]).unwrap()[0];
        assert!(below[1..].iter().any(|b| *b != 0.0));
    }

    #[test]
    fn support_shrinks_along_path() {
        for seed in 0..5 {
            let (x, y) = data(80, seed, [0.0, 1.0, 0.3, 0.1], 0.3);
            let grid = default_lambda_grid(&x, &y);
            let path = lasso_path(&x, &y, &grid).unwrap();
            let nz: Vec<usize> = path.iter().map(|c| c[1..].iter().filter(|b| **b != 0.0).count()).collect();
            // grid descending => support non-decreasing along the path
            assert!(nz.windows(2).all(|w| w[0] <= w[1]), "{nz:?}");
        }
    }

    #[test]
    fn importance_ordering() {
        let imp = importance_from_slopes([1.10, 0.0, 0.48]);
        let names: Vec<_> = imp.iter().map(|i| i.predictor).collect();
        assert_eq!(names, ["q-ent", "interaction", "ratio"]);
        assert!(!imp[2].significant);
        assert!(importance_from_slopes([0.0; 3]).iter().all(|i| !i.significant));
        assert_eq!(importance_from_slopes([0.0, -0.2, 0.0])[0].predictor, "ratio");
    }
}
