//! wasm-bindgen surface for the static demo page in `www/`.

pub mod demo;

use crpred_core::ScalarField;
use wasm_bindgen::prelude::*;

fn js_err(e: crpred_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// A generated field kept on the Rust side between calls.
#[wasm_bindgen]
pub struct Field {
    inner: ScalarField,
    kind: u8,
}

#[wasm_bindgen]
impl Field {
    /// Samples a type-`kind` Gaussian field on a `grid x grid` lattice.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: u8, grid: usize, range_a: f64, seed: u32) -> Result<Field, JsError> {
        let inner = demo::sample(kind, grid, range_a, u64::from(seed)).map_err(js_err)?;
        Ok(Field { inner, kind })
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.inner.shape()[1]
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.inner.shape()[0]
    }

    /// Grey levels for an `ImageData` canvas.
    pub fn grey(&self) -> Vec<u8> {
        demo::grey_levels(&self.inner)
    }

    pub fn analyze(&self, eps_abs: f64) -> Result<Analysis, JsError> {
        demo::analyze(&self.inner, eps_abs).map(Analysis).map_err(js_err)
    }

    /// Trains on `corpus_n` fresh samples of the same type, then predicts.
    pub fn forecast(&self, eps_abs: f64, corpus_n: usize, seed: u32) -> Result<Forecast, JsError> {
        demo::forecast(&self.inner, self.kind, corpus_n, eps_abs, u64::from(seed))
            .map(Forecast)
            .map_err(js_err)
    }
}

#[wasm_bindgen]
pub struct Analysis(demo::Analysis);

#[wasm_bindgen]
impl Analysis {
    #[wasm_bindgen(getter)]
    pub fn q_entropy(&self) -> f64 {
        self.0.q_entropy
    }
    #[wasm_bindgen(getter)]
    pub fn svd_trunc(&self) -> f64 {
        self.0.svd_trunc
    }
    #[wasm_bindgen(getter)]
    pub fn sigma(&self) -> f64 {
        self.0.sigma
    }
    #[wasm_bindgen(getter)]
    pub fn cr_predictive(&self) -> f64 {
        self.0.cr_predictive
    }
    #[wasm_bindgen(getter)]
    pub fn cr_rounding(&self) -> f64 {
        self.0.cr_rounding
    }
}

#[wasm_bindgen]
pub struct Forecast(demo::Forecast);

#[wasm_bindgen]
impl Forecast {
    #[wasm_bindgen(getter)]
    pub fn predicted_predictive(&self) -> f64 {
        self.0.predicted_predictive
    }
    #[wasm_bindgen(getter)]
    pub fn predicted_rounding(&self) -> f64 {
        self.0.predicted_rounding
    }
    #[wasm_bindgen(getter)]
    pub fn measured_predictive(&self) -> f64 {
        self.0.measured_predictive
    }
    #[wasm_bindgen(getter)]
    pub fn measured_rounding(&self) -> f64 {
        self.0.measured_rounding
    }
    #[wasm_bindgen(getter)]
    pub fn extrapolated(&self) -> bool {
        self.0.extrapolated
    }
    #[wasm_bindgen(getter)]
    pub fn chosen(&self) -> String {
        self.0.chosen().to_string()
    }
}
