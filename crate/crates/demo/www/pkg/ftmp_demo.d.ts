/* tslint:disable */
/* eslint-disable */

export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    arena_radius(): number;
    clearance(): number;
    goals(): Float64Array;
    min_distance(): number;
    /**
     * `scenario` is `example1`, `example2` or `random` (which uses `count`).
     */
    constructor(scenario: string, count: number, seed: bigint, gain: number, dt: number);
    /**
     * Kinetic positions as `[x0, y0, x1, y1, ...]`.
     */
    positions(): Float64Array;
    statics(): Float64Array;
    status(): string;
    step(steps: number): void;
    time(): number;
}

export function barrierGrid(gx: number, gy: number, nx: number, ny: number, extent: number, n: number): Float64Array;

export function settlingBound(sx: number, sy: number, gx: number, gy: number, nx: number, ny: number, gain: number): Float64Array;

export function spuriousPoints(gx: number, gy: number, nx: number, ny: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly barrierGrid: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly settlingBound: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly simulation_arena_radius: (a: number) => number;
    readonly simulation_clearance: (a: number) => number;
    readonly simulation_goals: (a: number) => [number, number];
    readonly simulation_min_distance: (a: number) => number;
    readonly simulation_new: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number];
    readonly simulation_positions: (a: number) => [number, number];
    readonly simulation_statics: (a: number) => [number, number];
    readonly simulation_status: (a: number) => [number, number];
    readonly simulation_step: (a: number, b: number) => void;
    readonly simulation_time: (a: number) => number;
    readonly spuriousPoints: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
