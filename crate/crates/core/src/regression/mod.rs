//! Regression models from predictors to log compression ratio: linear with
//! interaction, penalized cubic splines with a tensor-product interaction,
//! and LASSO for predictor importance.

pub mod lasso;
pub mod linear;
pub mod model;
pub mod scaler;
pub mod spline;

pub use lasso::{default_lambda_grid, fit_lasso, lambda_max, lasso_path, Importance, LassoFit};
pub use linear::{fit_linear, LinearCoeffs};
pub use model::{predict_cr, predictor_importance, FitOptions, FittedModel, ModelBody, ModelKind, Prediction};
pub use scaler::{standardize, StandardScaler};
pub use spline::{fit_spline_gam, Marginal, SplineModel};
