//! Target-independent logic behind the browser bindings.

use crpred_core::codec::{compress_predictive, compress_rounding, CR_CAP};
use crpred_core::predictors::build_predictor_vector;
use crpred_core::regression::{FitOptions, FittedModel, ModelKind};
use crpred_core::synth::{corpus_specs, derive_seed, sample_multiscale, type_spec, SampleType};
use crpred_core::{Error, Result, ScalarField};

pub const MAX_GRID: usize = 256;
/// Base-range sweep of the training corpus.
pub const CORPUS_RANGES: (f64, f64) = (4.0, 64.0);

pub fn sample(kind: u8, grid: usize, range_a: f64, seed: u64) -> Result<ScalarField> {
    if !(8..=MAX_GRID).contains(&grid) {
        return Err(Error::InvalidParameter(format!("grid {grid} outside 8..={MAX_GRID}")));
    }
    if !(range_a > 0.0) {
        return Err(Error::InvalidParameter(format!("range {range_a} must be positive")));
    }
    let kind = SampleType::from_index(kind)?;
    sample_multiscale(&type_spec(kind, (grid, grid), range_a, seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Analysis {
    pub q_entropy: f64,
    pub svd_trunc: f64,
    pub sigma: f64,
    pub cr_predictive: f64,
    pub cr_rounding: f64,
}

pub fn analyze(field: &ScalarField, eps_abs: f64) -> Result<Analysis> {
    let v = build_predictor_vector(field, eps_abs)?;
    Ok(Analysis {
        q_entropy: v.q_entropy,
        svd_trunc: v.svd_trunc,
        sigma: v.sigma,
        cr_predictive: compress_predictive(field, eps_abs)?.1.cr,
        cr_rounding: compress_rounding(field, eps_abs)?.1.cr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub predicted_predictive: f64,
    pub predicted_rounding: f64,
    pub measured_predictive: f64,
    pub measured_rounding: f64,
    /// The field's predictors fall outside the corpus range.
    pub extrapolated: bool,
}

impl Forecast {
    /// Codec with the higher predicted ratio; ties go to `predictive`.
    pub fn chosen(&self) -> &'static str {
        if self.predicted_rounding > self.predicted_predictive {
            "rounding"
        } else {
            "predictive"
        }
    }

    pub fn ape(predicted: f64, measured: f64) -> f64 {
        100.0 * (measured - predicted).abs() / measured
    }
}

/// Fits one linear model per codec on a synthetic corpus of the field's
/// type and grid, then predicts and measures the field itself.
pub fn forecast(field: &ScalarField, kind: u8, corpus_n: usize, eps_abs: f64, seed: u64) -> Result<Forecast> {
    if !(6..=200).contains(&corpus_n) {
        return Err(Error::InvalidParameter(format!("corpus size {corpus_n} outside 6..=200")));
    }
    let grid = match field.shape() {
        [m, n] => (*m, *n),
        s => return Err(Error::NotTwoDimensional { dims: s.len() }),
    };
    let kind = SampleType::from_index(kind)?;
    let mut crs: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut kept_rows: [Vec<_>; 2] = [Vec::new(), Vec::new()];
    for spec in corpus_specs(kind, corpus_n, grid, CORPUS_RANGES, derive_seed(seed, 0xC0)) {
        let f = sample_multiscale(&spec)?;
        let v = build_predictor_vector(&f, eps_abs)?;
        let measured = [compress_predictive(&f, eps_abs)?.1.cr, compress_rounding(&f, eps_abs)?.1.cr];
        for (c, cr) in measured.into_iter().enumerate() {
            if cr <= CR_CAP {
                crs[c].push(cr);
                kept_rows[c].push(v);
            }
        }
    }
    let opts = FitOptions {
        seed,
        ..FitOptions::default()
    };
    let target = build_predictor_vector(field, eps_abs)?;
    let mut predicted = [0.0; 2];
    let mut extrapolated = false;
    for c in 0..2 {
        let model = FittedModel::fit(ModelKind::Linear, &kept_rows[c], &crs[c], &opts)?;
        let p = model.predict(&target)?;
        predicted[c] = p.cr;
        extrapolated |= p.extrapolated;
    }
    let a = analyze(field, eps_abs)?;
    Ok(Forecast {
        predicted_predictive: predicted[0],
        predicted_rounding: predicted[1],
        measured_predictive: a.cr_predictive,
        measured_rounding: a.cr_rounding,
        extrapolated,
    })
}

/// Values mapped to `[0, 255]` grey levels, row-major.
pub fn grey_levels(field: &ScalarField) -> Vec<u8> {
    let v = field.values();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    v.iter().map(|&x| ((x - lo) / span * 255.0).round() as u8).collect()
}
