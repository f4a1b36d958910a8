/* tslint:disable */
/* eslint-disable */

/**
 * Pure-state mean-squared-error bound for `k` qubits and `n` repetitions.
 */
export function bound(k: number, n: number): number;

/**
 * Mean squared error of the rank-1 and rank-2 estimators and the rank-2
 * selection rates for the qubit with eigenvalues `(λ, 1 − λ)`.
 */
export function mse_curve(lambda: number, n_values: Uint32Array, replicates: number, seed: number): string;

/**
 * Simulate `n` repetitions per setting from the qubit with Bloch vector
 * `(x, y, z)`, fit ranks 1 and 2 and report both criteria.
 */
export function select_one_qubit(x: number, y: number, z: number, n: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bound: (a: number, b: number) => number;
    readonly mse_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly select_one_qubit: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
