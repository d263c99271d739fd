/* @ts-self-types="./crpred_web.d.ts" */

export class Analysis {
    static __wrap(ptr) {
        const obj = Object.create(Analysis.prototype);
        obj.__wbg_ptr = ptr;
        AnalysisFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        AnalysisFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_analysis_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get cr_predictive() {
        const ret = wasm.analysis_cr_predictive(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get cr_rounding() {
        const ret = wasm.analysis_cr_rounding(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get q_entropy() {
        const ret = wasm.analysis_q_entropy(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get sigma() {
        const ret = wasm.analysis_sigma(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get svd_trunc() {
        const ret = wasm.analysis_svd_trunc(this.__wbg_ptr);
        return ret;
    }
}
if (Symbol.dispose) Analysis.prototype[Symbol.dispose] = Analysis.prototype.free;

/**
 * A generated field kept on the Rust side between calls.
 */
export class Field {
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        FieldFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_field_free(ptr, 0);
    }
    /**
     * @param {number} eps_abs
     * @returns {Analysis}
     */
    analyze(eps_abs) {
        const ret = wasm.field_analyze(this.__wbg_ptr, eps_abs);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return Analysis.__wrap(ret[0]);
    }
    /**
     * Trains on `corpus_n` fresh samples of the same type, then predicts.
     * @param {number} eps_abs
     * @param {number} corpus_n
     * @param {number} seed
     * @returns {Forecast}
     */
    forecast(eps_abs, corpus_n, seed) {
        const ret = wasm.field_forecast(this.__wbg_ptr, eps_abs, corpus_n, seed);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return Forecast.__wrap(ret[0]);
    }
    /**
     * Grey levels for an `ImageData` canvas.
     * @returns {Uint8Array}
     */
    grey() {
        const ret = wasm.field_grey(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * @returns {number}
     */
    get height() {
        const ret = wasm.field_height(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Samples a type-`kind` Gaussian field on a `grid x grid` lattice.
     * @param {number} kind
     * @param {number} grid
     * @param {number} range_a
     * @param {number} seed
     */
    constructor(kind, grid, range_a, seed) {
        const ret = wasm.field_new(kind, grid, range_a, seed);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        this.__wbg_ptr = ret[0];
        FieldFinalization.register(this, this.__wbg_ptr, this);
        return this;
    }
    /**
     * @returns {number}
     */
    get width() {
        const ret = wasm.field_width(this.__wbg_ptr);
        return ret >>> 0;
    }
}
if (Symbol.dispose) Field.prototype[Symbol.dispose] = Field.prototype.free;

export class Forecast {
    static __wrap(ptr) {
        const obj = Object.create(Forecast.prototype);
        obj.__wbg_ptr = ptr;
        ForecastFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ForecastFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_forecast_free(ptr, 0);
    }
    /**
     * @returns {string}
     */
    get chosen() {
        let deferred1_0;
        let deferred1_1;
        try {
            const ret = wasm.forecast_chosen(this.__wbg_ptr);
            deferred1_0 = ret[0];
            deferred1_1 = ret[1];
            return getStringFromWasm0(ret[0], ret[1]);
        } finally {
            wasm.__wbindgen_free(deferred1_0, deferred1_1, 1);
        }
    }
    /**
     * @returns {boolean}
     */
    get extrapolated() {
        const ret = wasm.forecast_extrapolated(this.__wbg_ptr);
        return ret !== 0;
    }
    /**
     * @returns {number}
     */
    get measured_predictive() {
        const ret = wasm.forecast_measured_predictive(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get measured_rounding() {
        const ret = wasm.forecast_measured_rounding(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get predicted_predictive() {
        const ret = wasm.forecast_predicted_predictive(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get predicted_rounding() {
        const ret = wasm.forecast_predicted_rounding(this.__wbg_ptr);
        return ret;
    }
}
if (Symbol.dispose) Forecast.prototype[Symbol.dispose] = Forecast.prototype.free;
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_30c8987f7c2ed4e2: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./crpred_web_bg.js": import0,
    };
}

const AnalysisFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_analysis_free(ptr, 1));
const FieldFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_field_free(ptr, 1));
const ForecastFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_forecast_free(ptr, 1));

function getArrayU8FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint8ArrayMemory0().subarray(ptr / 1, ptr / 1 + len);
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('crpred_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
