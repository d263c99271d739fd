//! Statistical prediction of lossy compression ratios for gridded
//! floating-point data.

pub mod codec;
pub mod error;
pub mod evaluation;
pub mod field;
pub mod predictors;
pub mod regression;
pub mod synth;
pub mod usecases;

pub use error::{Error, Result};
pub use field::{ScalarField, SliceStack};
