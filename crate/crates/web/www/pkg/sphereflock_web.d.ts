/* tslint:disable */
/* eslint-disable */

/**
 * Admissibility of a seeded random cluster under the reference kernel.
 */
export function checkRandom(seed: number, n: number, pos_spread: number, vel_scale: number, sigma: number): string;

/**
 * Integrates the six-agent reference configuration.
 */
export function simulatePaper(sigma: number, t_end: number, dt: number, frame_stride: number): string;

/**
 * Decay constants for a builtin kernel (`exponential`, `linear`, `quadratic`).
 */
export function thresholds(kernel: string, parameter: number, sigma: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly checkRandom: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly simulatePaper: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly thresholds: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
