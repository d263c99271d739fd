//! Trained compression-ratio models, prediction and persistence.
//!
//! Models work on the log scale: inputs are the standardized
//! `(log q-ent, log(svd-trunc / sigma))` pair, the response is `log CR`, and
//! predictions are exponentiated back to ratios.

use std::fmt;
use std::str::FromStr;

use super::lasso::{default_lambda_grid, fit_lasso, importance_from_slopes, Importance};
use super::linear::{fit_linear, LinearCoeffs};
use super::scaler::StandardScaler;
use super::spline::{fit_spline_gam, Marginal, SplineModel, MIN_SPLINE_ROWS};
use crate::error::{Error, Result};
use crate::predictors::PredictorVector;

pub const MODEL_FORMAT_HEADER: &str = "crpred-model v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Linear,
    Spline,
    Lasso,
    /// Predicts the training mean of log CR; a reference baseline.
    Mean,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Spline => "spline",
            ModelKind::Lasso => "lasso",
            ModelKind::Mean => "mean",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "spline" => Ok(ModelKind::Spline),
            "lasso" => Ok(ModelKind::Lasso),
            "mean" => Ok(ModelKind::Mean),
            _ => Err(Error::Parse(format!("unknown model kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBody {
    Untrained,
    Linear(LinearCoeffs),
    Lasso { coeffs: LinearCoeffs, lambda: f64 },
    Spline(SplineModel),
    Mean(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Folds for choosing the LASSO penalty.
    pub lasso_folds: usize,
    pub seed: u64,
    /// Explicit LASSO penalty grid; defaults to a 100-point log path.
    pub lambda_grid: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lasso_folds: 8,
            seed: crate::evaluation::DEFAULT_SEED,
            lambda_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub scaler: StandardScaler,
    pub body: ModelBody,
    /// Raw log-predictor range seen in training.
    pub training_range: [(f64, f64); 2],
}

/// A predicted ratio and whether the input left the training range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub cr: f64,
    pub extrapolated: bool,
}

impl FittedModel {
    /// A placeholder that fails every prediction with `UntrainedModel`.
    pub fn untrained(kind: ModelKind) -> Self {
        Self {
            kind,
            scaler: StandardScaler {
                means: vec![0.0; 2],
                stds: vec![1.0; 2],
            },
            body: ModelBody::Untrained,
            training_range: [(0.0, 0.0); 2],
        }
    }

    /// Fits a model of `kind` to predictor rows and their measured ratios.
    /// Spline fits on fewer than 12 rows degrade to the linear model.
    pub fn fit(kind: ModelKind, rows: &[PredictorVector], crs: &[f64], opts: &FitOptions) -> Result<Self> {
        if rows.len() != crs.len() {
            return Err(Error::InvalidParameter("predictor rows and ratios differ in length".into()));
        }
        if let Some(bad) = crs.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("compression ratio {bad} must be positive")));
        }
        let raw: Vec<[f64; 2]> = rows.iter().map(|r| r.log_predictors()).collect();
        let y: Vec<f64> = crs.iter().map(|c| c.ln()).collect();
        let scaler = StandardScaler::fit(&raw)?;
        let z = scaler.transform_all(&raw);
        let mut training_range = [(f64::INFINITY, f64::NEG_INFINITY); 2];
        for r in &raw {
            for j in 0..2 {
                training_range[j].0 = training_range[j].0.min(r[j]);
                training_range[j].1 = training_range[j].1.max(r[j]);
            }
        }
        let (kind, body) = match kind {
            ModelKind::Linear => (kind, ModelBody::Linear(fit_linear(&z, &y)?)),
            ModelKind::Spline if z.len() < MIN_SPLINE_ROWS => {
                log::warn!(
                    "{} rows are too few for the spline model (need {MIN_SPLINE_ROWS}); fitting the linear model",
                    z.len()
                );
                (ModelKind::Linear, ModelBody::Linear(fit_linear(&z, &y)?))
            }
            ModelKind::Spline => (kind, ModelBody::Spline(fit_spline_gam(&z, &y)?)),
            ModelKind::Lasso => {
                let grid = match &opts.lambda_grid {
                    Some(g) => g.clone(),
                    None => default_lambda_grid(&z, &y),
                };
                let k = opts.lasso_folds.min(z.len());
                let fit = fit_lasso(&z, &y, &grid, k, opts.seed)?;
                (
                    kind,
                    ModelBody::Lasso {
                        coeffs: fit.coeffs,
                        lambda: fit.lambda,
                    },
                )
            }
            ModelKind::Mean => (kind, ModelBody::Mean(y.iter().sum::<f64>() / y.len() as f64)),
        };
        Ok(Self {
            kind,
            scaler,
            body,
            training_range,
        })
    }

    pub fn is_extrapolating(&self, v: &PredictorVector) -> bool {
        v.log_predictors()
            .iter()
            .zip(&self.training_range)
            .any(|(x, (lo, hi))| x < lo || x > hi)
    }

    /// Prediction on the log-CR scale.
    pub fn predict_log(&self, v: &PredictorVector) -> Result<f64> {
        let raw = v.log_predictors();
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite predictor".into()));
        }
        let z = self.scaler.transform(&raw);
        match &self.body {
            ModelBody::Untrained => Err(Error::UntrainedModel),
            ModelBody::Linear(c) | ModelBody::Lasso { coeffs: c, .. } => Ok(c.eval(&z)),
            ModelBody::Spline(s) => Ok(s.eval(&z)),
            ModelBody::Mean(m) => Ok(*m),
        }
    }

    pub fn predict(&self, v: &PredictorVector) -> Result<Prediction> {
        Ok(Prediction {
            cr: self.predict_log(v)?.exp(),
            extrapolated: self.is_extrapolating(v),
        })
    }

    pub fn linear_coeffs(&self) -> Option<&LinearCoeffs> {
        match &self.body {
            ModelBody::Linear(c) | ModelBody::Lasso { coeffs: c, .. } => Some(c),
            _ => None,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MODEL_FORMAT_HEADER}\nkind {}\n", self.kind);
        out += &format!(
            "scaler {} {} {} {}\n",
            self.scaler.means[0], self.scaler.stds[0], self.scaler.means[1], self.scaler.stds[1]
        );
        out += &format!(
            "range {} {} {} {}\n",
            self.training_range[0].0, self.training_range[0].1, self.training_range[1].0, self.training_range[1].1
        );
        let linear = |c: &LinearCoeffs| format!("linear {} {} {} {} {}\n", c.a, c.b, c.c, c.d, c.sigma_eps);
        match &self.body {
            ModelBody::Untrained => out += "untrained\n",
            ModelBody::Linear(c) => out += &linear(c),
            ModelBody::Lasso { coeffs, lambda } => {
                out += &linear(coeffs);
                out += &format!("lambda {lambda}\n");
            }
            ModelBody::Mean(m) => out += &format!("mean {m}\n"),
            ModelBody::Spline(s) => {
                for (j, m) in s.marginals.iter().enumerate() {
                    match m {
                        Marginal::Linear => out += &format!("marginal {j} linear\n"),
                        Marginal::Spline { knots } => {
                            out += &format!("marginal {j} spline {}\n", join(knots));
                        }
                    }
                }
                out += &format!("penalty {} {}\n", s.penalty, s.gcv);
                out += &format!("coef {}\n", join(&s.coef));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(MODEL_FORMAT_HEADER) {
            return Err(bad("missing or unsupported header"));
        }
        let mut kind = None;
        let mut scaler = None;
        let mut range = None;
        let mut linear = None;
        let mut lambda = None;
        let mut mean = None;
        let mut marginals: [Option<Marginal>; 2] = [None, None];
        let mut penalty = None;
        let mut coef = None;
        let mut untrained = false;
        for line in lines {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or("");
            let rest: Vec<&str> = parts.collect();
            let nums = |xs: &[&str]| -> Result<Vec<f64>> {
                xs.iter()
                    .map(|t| t.parse::<f64>().map_err(|_| Error::ModelFormat(format!("bad number `{t}`"))))
                    .collect()
            };
            match key {
                "kind" => kind = Some(rest.first().ok_or_else(|| bad("kind"))?.parse::<ModelKind>()?),
                "scaler" => scaler = Some(fixed::<4>(nums(&rest)?, "scaler")?),
                "range" => range = Some(fixed::<4>(nums(&rest)?, "range")?),
                "linear" => linear = Some(fixed::<5>(nums(&rest)?, "linear")?),
                "lambda" => lambda = Some(fixed::<1>(nums(&rest)?, "lambda")?[0]),
                "mean" => mean = Some(fixed::<1>(nums(&rest)?, "mean")?[0]),
                "penalty" => penalty = Some(fixed::<2>(nums(&rest)?, "penalty")?),
                "coef" => coef = Some(nums(&rest)?),
                "untrained" => untrained = true,
                "marginal" => {
                    let j: usize = rest.first().and_then(|t| t.parse().ok()).filter(|&j| j < 2).ok_or_else(|| bad("marginal index"))?;
                    marginals[j] = Some(match rest.get(1) {
                        Some(&"linear") => Marginal::Linear,
                        Some(&"spline") => Marginal::Spline { knots: nums(&rest[2..])? },
                        _ => return Err(bad("marginal type")),
                    });
                }
                other => return Err(Error::ModelFormat(format!("unknown record `{other}`"))),
            }
        }
        let kind = kind.ok_or_else(|| bad("missing kind"))?;
        let s = scaler.ok_or_else(|| bad("missing scaler"))?;
        let r = range.ok_or_else(|| bad("missing range"))?;
        let lin = |l: [f64; 5]| LinearCoeffs { a: l[0], b: l[1], c: l[2], d: l[3], sigma_eps: l[4] };
        let body = if untrained {
            ModelBody::Untrained
        } else {
            match kind {
                ModelKind::Linear => ModelBody::Linear(lin(linear.ok_or_else(|| bad("missing linear"))?)),
                ModelKind::Lasso => ModelBody::Lasso {
                    coeffs: lin(linear.ok_or_else(|| bad("missing linear"))?),
                    lambda: lambda.ok_or_else(|| bad("missing lambda"))?,
                },
                ModelKind::Mean => ModelBody::Mean(mean.ok_or_else(|| bad("missing mean"))?),
                ModelKind::Spline => {
                    let [m0, m1] = marginals;
                    let marginals = [m0.ok_or_else(|| bad("missing marginal 0"))?, m1.ok_or_else(|| bad("missing marginal 1"))?];
                    for m in &marginals {
                        if let Marginal::Spline { knots } = m {
                            if knots.len() < 8 {
                                return Err(bad("spline marginal needs at least 8 knots"));
                            }
                        }
                    }
                    let coef = coef.ok_or_else(|| bad("missing coef"))?;
                    if coef.len() != SplineModel::n_coef(&marginals) {
                        return Err(bad("coefficient count does not match the basis"));
                    }
                    let p = penalty.ok_or_else(|| bad("missing penalty"))?;
                    ModelBody::Spline(SplineModel {
                        marginals,
                        coef,
                        penalty: p[0],
                        gcv: p[1],
                    })
                }
            }
        };
        Ok(Self {
            kind,
            scaler: StandardScaler {
                means: vec![s[0], s[2]],
                stds: vec![s[1], s[3]],
            },
            body,
            training_range: [(r[0], r[1]), (r[2], r[3])],
        })
    }
}

fn fixed<const N: usize>(v: Vec<f64>, what: &str) -> Result<[f64; N]> {
    v.try_into()
        .map_err(|_| Error::ModelFormat(format!("`{what}` needs {N} numbers")))
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn predict_cr(model: &FittedModel, v: &PredictorVector) -> Result<Prediction> {
    model.predict(v)
}

/// Predictor importance of a LASSO model: absolute standardized slopes,
/// largest first, zero slopes flagged insignificant.
pub fn predictor_importance(model: &FittedModel) -> Result<Vec<Importance>> {
    match &model.body {
        ModelBody::Lasso { coeffs, .. } => Ok(importance_from_slopes(coeffs.slopes())),
        _ => Err(Error::WrongModelKind {
            expected: "lasso",
            got: model.kind.name(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rows(n: usize, seed: u64) -> Vec<PredictorVector> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                PredictorVector::from_parts(
                    rng.random_range(2.0..12.0),
                    rng.random_range(0.01..0.6),
                    rng.random_range(0.3..2.0),
                    1e-3,
                )
            })
            .collect()
    }

    fn truth(v: &PredictorVector) -> f64 {
        (1.0 - 0.8 * v.log_qent - 0.5 * v.log_ratio + 0.1 * v.log_qent * v.log_ratio).exp()
    }

    #[test]
    fn constant_model_predicts_its_intercept() {
        let m = FittedModel {
            kind: ModelKind::Linear,
            scaler: StandardScaler { means: vec![0.0, 0.0], stds: vec![1.0, 1.0] },
            body: ModelBody::Linear(LinearCoeffs { a: 10f64.ln(), b: 0.0, c: 0.0, d: 0.0, sigma_eps: 0.0 }),
            training_range: [(-1.0, 1.0); 2],
        };
        for v in rows(5, 1) {
            assert!((predict_cr(&m, &v).unwrap().cr - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_fit_recovers_training_ratio() {
        let r = rows(30, 2);
        let crs: Vec<f64> = r.iter().map(truth).collect();
        let m = FittedModel::fit(ModelKind::Linear, &r, &crs, &FitOptions::default()).unwrap();
        for (v, cr) in r.iter().zip(&crs) {
            let p = m.predict(v).unwrap();
            assert!(((p.cr - cr) / cr).abs() < 1e-6);
            assert!(!p.extrapolated);
        }
    }

    #[test]
    fn outside_training_range_is_flagged() {
        let r = rows(30, 3);
        let crs: Vec<f64> = r.iter().map(truth).collect();
        for kind in [ModelKind::Linear, ModelKind::Spline] {
            let m = FittedModel::fit(kind, &r, &crs, &FitOptions::default()).unwrap();
            let far = PredictorVector::from_parts(40.0, 0.5, 1.0, 1e-3);
            let p = m.predict(&far).unwrap();
            assert!(p.extrapolated);
            assert!(p.cr > 0.0 && p.cr.is_finite());
        }
    }

    #[test]
    fn untrained_model_refuses() {
        let m = FittedModel::untrained(ModelKind::Spline);
        assert!(matches!(m.predict(&rows(1, 0)[0]), Err(Error::UntrainedModel)));
    }

    #[test]
    fn small_spline_fit_degrades_to_linear() {
        let r = rows(8, 4);
        let crs: Vec<f64> = r.iter().map(truth).collect();
        let m = FittedModel::fit(ModelKind::Spline, &r, &crs, &FitOptions::default()).unwrap();
        assert_eq!(m.kind, ModelKind::Linear);
    }

    #[test]
    fn text_roundtrip_every_kind() {
        let r = rows(40, 5);
        let crs: Vec<f64> = r.iter().map(|v| truth(v) * 1.01).collect();
        for kind in [ModelKind::Linear, ModelKind::Spline, ModelKind::Lasso, ModelKind::Mean] {
            let m = FittedModel::fit(kind, &r, &crs, &FitOptions::default()).unwrap();
            let text = m.to_text();
            let back = FittedModel::from_text(&text).unwrap();
            assert_eq!(back, m, "{kind}");
            assert_eq!(back.to_text(), text);
        }
        assert!(FittedModel::from_text("crpred-model v0\n").is_err());
        assert!(FittedModel::from_text(&format!("{MODEL_FORMAT_HEADER}\nkind spline\n")).is_err());
    }

    #[test]
    fn importance_needs_lasso() {
        let r = rows(40, 6);
        let crs: Vec<f64> = r.iter().map(truth).collect();
        let lin = FittedModel::fit(ModelKind::Linear, &r, &crs, &FitOptions::default()).unwrap();
        assert!(matches!(predictor_importance(&lin), Err(Error::WrongModelKind { .. })));
        let lasso = FittedModel::fit(ModelKind::Lasso, &r, &crs, &FitOptions::default()).unwrap();
        assert_eq!(predictor_importance(&lasso).unwrap().len(), 3);
    }
}
