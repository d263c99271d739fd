/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_analysis_free: (a: number, b: number) => void;
export const __wbg_field_free: (a: number, b: number) => void;
export const __wbg_forecast_free: (a: number, b: number) => void;
export const analysis_cr_predictive: (a: number) => number;
export const analysis_cr_rounding: (a: number) => number;
export const analysis_q_entropy: (a: number) => number;
export const analysis_sigma: (a: number) => number;
export const analysis_svd_trunc: (a: number) => number;
export const field_analyze: (a: number, b: number) => [number, number, number];
export const field_forecast: (a: number, b: number, c: number, d: number) => [number, number, number];
export const field_grey: (a: number) => [number, number];
export const field_height: (a: number) => number;
export const field_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const field_width: (a: number) => number;
export const forecast_chosen: (a: number) => [number, number];
export const forecast_extrapolated: (a: number) => number;
export const forecast_measured_predictive: (a: number) => number;
export const forecast_measured_rounding: (a: number) => number;
export const forecast_predicted_predictive: (a: number) => number;
export const forecast_predicted_rounding: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
