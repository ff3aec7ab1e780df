/* tslint:disable */
/* eslint-disable */

/**
 * `n` points on the Dikin shell around `(x, y)`, which must be strictly
 * inside the demo polytope.
 */
export function dikin_samples(x: number, y: number, n: number, seed: bigint): string;

/**
 * Cumulative regret of barrier mirror descent on the capped simplex
 * `{x ∈ Δ₃ : x ≤ 0.8}` with a constant loss and `ε_t = β/√t`.
 */
export function omd_regret_curve(adversary: string, rounds: number, beta: number, seed: bigint): string;

/**
 * The reduction on a random instance with switching losses, next to the
 * expected regret of the uniform policy on the same losses.
 */
export function reduction_vs_uniform(states: number, actions: number, horizon: number, episodes: number, seed: bigint): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly dikin_samples: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly omd_regret_curve: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly reduction_vs_uniform: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
