/* tslint:disable */
/* eslint-disable */

/**
 * `V'(h) h^2` on `[lo, hi]` with its maximiser.
 */
export function beta_curve(c: number, d_s: number, v_max: number, lo: number, hi: number): string;

/**
 * Two-vehicle run behind a constant leader, as a curve in the `(V(h), v)` plane.
 */
export function phase_portrait(alpha: number, beta: number, v_star: number, h0: number, v0: number, t_end: number): string;

/**
 * Runs a figure preset with the given gains.
 */
export function simulate_preset(id: string, alpha: number, beta: number, t_end: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly beta_curve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly phase_portrait: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly simulate_preset: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
