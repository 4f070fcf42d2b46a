/* tslint:disable */
/* eslint-disable */

/**
 * The two-state reference game as an instance document.
 */
export function g2Instance(): string;

/**
 * Runs damped best-response dynamics from the uniform pair.
 */
export function nashDynamics(instance: string, beta: number, eps: number, max_rounds: number): string;

/**
 * Risk sensitivity sweep: values of the uniform pair and of each player's
 * best response against it, for `steps` values of theta on a log grid.
 */
export function riskCurve(instance: string, theta_min: number, theta_max: number, steps: number): string;

/**
 * Monte Carlo estimate of the finite-horizon growth under the uniform
 * pair, next to the exact value, for both players. The seed is 32-bit so
 * that JavaScript can pass a plain number.
 */
export function simulate(instance: string, start: number, horizon: number, paths: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly g2Instance: () => [number, number];
    readonly nashDynamics: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly riskCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly simulate: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
