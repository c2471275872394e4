/* tslint:disable */
/* eslint-disable */

/**
 * Sweeps embedding angle `qubit` over `[-π, π]` with the other angles at 0.
 * Returns `[x, f(x), df/dx]` triples, flattened.
 */
export function chip_curve(qubits: number, layers: number, seed: bigint, qubit: number, points: number): Float64Array;

/**
 * Q-values (walk, jump) of an untrained `chips × qubits` ensemble on the
 * observation reached by the script.
 */
export function ensemble_q_values(chips: number, qubits: number, layers: number, seed: bigint, script: string): Float64Array;

export function frame_size(): number;

/**
 * Shade levels (0..=4) of every frame the script visits, reset frame first,
 * each `FRAME_SIZE × FRAME_SIZE` row-major. Steps after the episode ends are
 * ignored.
 */
export function render_script(script: string): Uint8Array;

/**
 * `[total reward, x position, done]` after the script.
 */
export function script_outcome(script: string): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly chip_curve: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number, number];
    readonly ensemble_q_values: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
    readonly frame_size: () => number;
    readonly render_script: (a: number, b: number) => [number, number, number, number];
    readonly script_outcome: (a: number, b: number) => [number, number, number, number];
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
