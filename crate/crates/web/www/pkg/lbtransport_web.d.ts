/* tslint:disable */
/* eslint-disable */

/**
 * Rows `[V, j_1, Phi_1, sigma]` for a symmetric bias `mu = +-V/2` on a single level.
 */
export function bias_sweep(level: number, coupling: number, beta: number, bias_max: number, points: number): Float64Array;

/**
 * Rows `[E, Re <f,R f>, Im <f,R f>, pi |f(E)|^2]` for a chain and a vector
 * given as interleaved `(re, im)` amplitudes on sites 1, 2, ...
 */
export function surface_green(onsite: number, hopping: number, amplitudes: Float64Array, points: number): Float64Array;

/**
 * Rows `[E, |S12|^2, |S21|^2, |S13|^2, |S31|^2, |S23|^2, |S32|^2]` across the band.
 */
export function transmission_sweep(flux: number, coupling: number, contact: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bias_sweep: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly surface_green: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly transmission_sweep: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
