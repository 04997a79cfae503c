/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_simulation_free: (a: number, b: number) => void;
export const barrierGrid: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const settlingBound: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const simulation_arena_radius: (a: number) => number;
export const simulation_clearance: (a: number) => number;
export const simulation_goals: (a: number) => [number, number];
export const simulation_min_distance: (a: number) => number;
export const simulation_new: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number];
export const simulation_positions: (a: number) => [number, number];
export const simulation_statics: (a: number) => [number, number];
export const simulation_status: (a: number) => [number, number];
export const simulation_step: (a: number, b: number) => void;
export const simulation_time: (a: number) => number;
export const spuriousPoints: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
