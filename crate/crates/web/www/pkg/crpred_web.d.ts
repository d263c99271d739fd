/* tslint:disable */
/* eslint-disable */

export class Analysis {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly cr_predictive: number;
    readonly cr_rounding: number;
    readonly q_entropy: number;
    readonly sigma: number;
    readonly svd_trunc: number;
}

/**
 * A generated field kept on the Rust side between calls.
 */
export class Field {
    free(): void;
    [Symbol.dispose](): void;
    analyze(eps_abs: number): Analysis;
    /**
     * Trains on `corpus_n` fresh samples of the same type, then predicts.
     */
    forecast(eps_abs: number, corpus_n: number, seed: number): Forecast;
    /**
     * Grey levels for an `ImageData` canvas.
     */
    grey(): Uint8Array;
    /**
     * Samples a type-`kind` Gaussian field on a `grid x grid` lattice.
     */
    constructor(kind: number, grid: number, range_a: number, seed: number);
    readonly height: number;
    readonly width: number;
}

export class Forecast {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly chosen: string;
    readonly extrapolated: boolean;
    readonly measured_predictive: number;
    readonly measured_rounding: number;
    readonly predicted_predictive: number;
    readonly predicted_rounding: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_analysis_free: (a: number, b: number) => void;
    readonly __wbg_field_free: (a: number, b: number) => void;
    readonly __wbg_forecast_free: (a: number, b: number) => void;
    readonly analysis_cr_predictive: (a: number) => number;
    readonly analysis_cr_rounding: (a: number) => number;
    readonly analysis_q_entropy: (a: number) => number;
    readonly analysis_sigma: (a: number) => number;
    readonly analysis_svd_trunc: (a: number) => number;
    readonly field_analyze: (a: number, b: number) => [number, number, number];
    readonly field_forecast: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly field_grey: (a: number) => [number, number];
    readonly field_height: (a: number) => number;
    readonly field_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly field_width: (a: number) => number;
    readonly forecast_chosen: (a: number) => [number, number];
    readonly forecast_extrapolated: (a: number) => number;
    readonly forecast_measured_predictive: (a: number) => number;
    readonly forecast_measured_rounding: (a: number) => number;
    readonly forecast_predicted_predictive: (a: number) => number;
    readonly forecast_predicted_rounding: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
