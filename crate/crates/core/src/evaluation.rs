//! k-fold cross-validated prediction error: per-fold median absolute
//! percentage error, its 10/50/90% quantiles, and the pooled out-of-sample
//! Pearson correlation.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::CR_CAP;
use crate::error::{Error, Result};
use crate::predictors::PredictorVector;
use crate::regression::{FitOptions, FittedModel, ModelKind};

/// Seed used for fold assignment when none is given.
pub const DEFAULT_SEED: u64 = 20_230_117;

pub const REPORT_HEADER: &str = "compressor,field,eps_abs,corr,medape_q50,medape_q10,medape_q90,n";

/// Fold count for `n` samples: 8 below 80 samples, 10 from there on.
pub fn default_k(n: usize) -> usize {
    if n < 80 {
        8
    } else {
        10
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold index of every sample.
    pub folds: Vec<usize>,
    pub seed: u64,
}

impl FoldAssignment {
    /// Training and held-out sample indices for fold `f`, both ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Random near-equal partition of `n` samples into `k` folds.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        folds[i] = pos % k;
    }
    Ok(FoldAssignment { k, folds, seed })
}

/// Absolute percentage error of a prediction.
pub fn ape(true_cr: f64, pred_cr: f64) -> Result<f64> {
    if true_cr == 0.0 {
        return Err(Error::ZeroTrueCr);
    }
    Ok(100.0 * (true_cr - pred_cr).abs() / true_cr.abs())
}

/// Linear-interpolation sample quantile (R type 7).
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    Ok(quantiles(values, &[p])?[0])
}

pub fn quantiles(values: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = sorted.len() - 1;
    Ok(probs
        .iter()
        .map(|p| {
            let h = last as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(last);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect())
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter("pearson inputs differ in length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientSamples(format!("pearson needs 2 pairs, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    let scale = mx.abs().max(my.abs()).max(1.0);
    if sxx <= 1e-24 * n * scale * scale || syy <= 1e-24 * n * scale * scale {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One observation: the predictors of a slice at an error bound and the
/// ratio the compressor achieved there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub predictors: PredictorVector,
    pub cr: f64,
}

/// Models and out-of-sample predictions of one cross-validation run.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub folds: FoldAssignment,
    pub models: Vec<FittedModel>,
    /// Held-out predicted ratio for every sample.
    pub predictions: Vec<f64>,
    pub fold_medape: Vec<f64>,
}

/// Trains one model per fold on the other folds and predicts the held-out
/// fold. Samples are used as given; no ratio cap is applied here.
pub fn cross_validate(samples: &[Sample], kind: ModelKind, folds: &FoldAssignment, opts: &FitOptions) -> Result<CvOutcome> {
    if folds.folds.len() != samples.len() {
        return Err(Error::InvalidParameter("fold assignment does not match the samples".into()));
    }
    let run_fold = |f: usize| -> Result<(FittedModel, Vec<(usize, f64)>, f64)> {
        let (train, test) = folds.split(f);
        let rows: Vec<PredictorVector> = train.iter().map(|&i| samples[i].predictors).collect();
        let crs: Vec<f64> = train.iter().map(|&i| samples[i].cr).collect();
        let model = FittedModel::fit(kind, &rows, &crs, opts)?;
        let mut preds = Vec::with_capacity(test.len());
        let mut apes = Vec::with_capacity(test.len());
        for &i in &test {
            let p = model.predict(&samples[i].predictors)?.cr;
            apes.push(ape(samples[i].cr, p)?);
            preds.push((i, p));
        }
        Ok((model, preds, median(&apes)?))
    };
    #[cfg(feature = "parallel")]
    let per_fold: Vec<_> = {
        use rayon::prelude::*;
        (0..folds.k).into_par_iter().map(run_fold).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_fold: Vec<_> = (0..folds.k).map(run_fold).collect();

    let mut predictions = vec![f64::NAN; samples.len()];
    let mut models = Vec::with_capacity(folds.k);
    let mut fold_medape = Vec::with_capacity(folds.k);
    for r in per_fold {
        let (model, preds, medape) = r?;
        for (i, p) in preds {
            predictions[i] = p;
        }
        models.push(model);
        fold_medape.push(medape);
    }
    Ok(CvOutcome {
        folds: folds.clone(),
        models,
        predictions,
        fold_medape,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub fold_medape: Vec<f64>,
    pub medape_q10: f64,
    pub medape_q50: f64,
    pub medape_q90: f64,
    pub pearson_corr: f64,
    pub n_samples: usize,
    pub compressor: String,
    pub field: String,
    pub eps_abs: f64,
}

impl EvalReport {
    pub fn labeled(mut self, compressor: &str, field: &str, eps_abs: f64) -> Self {
        self.compressor = compressor.to_string();
        self.field = field.to_string();
        self.eps_abs = eps_abs;
        self
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{:e},{:.4},{:.4},{:.4},{:.4},{}",
            self.compressor,
            self.field,
            self.eps_abs,
            self.pearson_corr,
            self.medape_q50,
            self.medape_q10,
            self.medape_q90,
            self.n_samples
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} eps={:e}: MedAPE {:.2}% ({:.2}, {:.2}), corr {:.3}, n={}",
            self.compressor,
            self.field,
            self.eps_abs,
            self.medape_q50,
            self.medape_q10,
            self.medape_q90,
            self.pearson_corr,
            self.n_samples
        )
    }
}

pub fn write_report_table(reports: &[EvalReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        out += &r.to_line();
        out.push('\n');
    }
    out
}

/// Cross-validated error report. Rows whose ratio exceeds the cap are
/// dropped before folds are assigned. A model whose pooled predictions are
/// constant reports a correlation of 0.
pub fn evaluate_cv(samples: &[Sample], kind: ModelKind, k: usize, seed: u64) -> Result<EvalReport> {
    let kept: Vec<Sample> = samples.iter().copied().filter(|s| s.cr <= CR_CAP).collect();
    if kept.len() < k.max(2) {
        return Err(Error::InsufficientSamples(format!(
            "{} samples below the ratio cap, {k} folds requested",
            kept.len()
        )));
    }
    let folds = kfold_split(kept.len(), k, seed)?;
    let opts = FitOptions {
        seed,
        ..FitOptions::default()
    };
    let cv = cross_validate(&kept, kind, &folds, &opts)?;
    let truth: Vec<f64> = kept.iter().map(|s| s.cr).collect();
    let pearson_corr = match pearson(&truth, &cv.predictions) {
        Ok(r) => r,
        Err(Error::ZeroVariance) => 0.0,
        Err(e) => return Err(e),
    };
    let q = quantiles(&cv.fold_medape, &[0.1, 0.5, 0.9])?;
    Ok(EvalReport {
        fold_medape: cv.fold_medape,
        medape_q10: q[0],
        medape_q50: q[1],
        medape_q90: q[2],
        pearson_corr,
        n_samples: kept.len(),
        compressor: String::new(),
        field: String::new(),
        eps_abs: kept[0].predictors.eps_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn fold_sizes_balance() {
        let mut s = kfold_split(9, 3, 1).unwrap().fold_sizes();
        assert_eq!(s, vec![3, 3, 3]);
        s = kfold_split(10, 3, 1).unwrap().fold_sizes();
        s.sort();
        assert_eq!(s, vec![3, 3, 4]);
        assert_eq!(kfold_split(10, 3, 5).unwrap(), kfold_split(10, 3, 5).unwrap());
        assert!(matches!(kfold_split(3, 4, 0), Err(Error::KTooLarge { .. })));
        assert!(kfold_split(3, 1, 0).is_err());
    }

    #[test]
    fn ape_examples() {
        assert_eq!(ape(10.0, 9.0).unwrap(), 10.0);
        assert_eq!(ape(10.0, 10.0).unwrap(), 0.0);
        assert!((ape(10.0, 12.0).unwrap() - 20.0).abs() < 1e-12);
        assert!(matches!(ape(0.0, 1.0), Err(Error::ZeroTrueCr)));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantiles(&[5.0], &[0.1, 0.5, 0.9]).unwrap(), vec![5.0; 3]);
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.5).unwrap(), 5.5);
        // (n-1)p = 0.9 -> 1 + 0.9
        assert!((quantile(&v, 0.1).unwrap() - 1.9).abs() < 1e-12);
        let mut rev = v.clone();
        rev.reverse();
        assert_eq!(quantiles(&rev, &[0.1, 0.5, 0.9]).unwrap(), quantiles(&v, &[0.1, 0.5, 0.9]).unwrap());
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptyInput)));
    }

    #[test]
    fn pearson_examples() {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&xs, &[3.0; 20]), Err(Error::ZeroVariance)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(pearson(&a, &b).unwrap().abs() < 0.1);
    }

    fn noiseless(n: usize, seed: u64) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v = PredictorVector::from_parts(
                    rng.random_range(2.0..12.0),
                    rng.random_range(0.01..0.5),
                    rng.random_range(0.4..2.0),
                    1e-3,
                );
                let cr = (2.0 - 0.9 * v.log_qent - 0.3 * v.log_ratio + 0.05 * v.log_qent * v.log_ratio).exp();
                Sample { predictors: v, cr }
            })
            .collect()
    }

    #[test]
    fn exact_model_recovery_has_negligible_error() {
        let r = evaluate_cv(&noiseless(40, 1), ModelKind::Linear, 8, 9).unwrap();
        assert!(r.medape_q50 < 0.1, "{r}");
        assert!(r.medape_q10 <= r.medape_q50 && r.medape_q50 <= r.medape_q90);
        assert!(r.pearson_corr > 0.999);
        assert_eq!(r.fold_medape.len(), 8);
    }

    #[test]
    fn mean_model_has_no_correlation() {
        let r = evaluate_cv(&noiseless(40, 2), ModelKind::Mean, 8, 9).unwrap();
        assert!(r.pearson_corr.abs() < 0.5, "{r}");
    }

    #[test]
    fn capped_rows_are_excluded() {
        let mut s = noiseless(30, 3);
        s[0].cr = 500.0;
        s[1].cr = 101.0;
        let r = evaluate_cv(&s, ModelKind::Linear, 8, 1).unwrap();
        assert_eq!(r.n_samples, 28);
        assert!(matches!(evaluate_cv(&s[..5], ModelKind::Linear, 8, 1), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn report_line_layout() {
        let r = evaluate_cv(&noiseless(30, 4), ModelKind::Linear, 8, 1).unwrap().labeled("predictive", "gauss", 1e-3);
        let line = r.to_line();
        assert_eq!(line.split(',').count(), REPORT_HEADER.split(',').count());
        assert!(line.starts_with("predictive,gauss,1e-3,"));
    }

    #[test]
    fn default_fold_count() {
        assert_eq!(default_k(60), 8);
        assert_eq!(default_k(80), 10);
    }
}
