/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_mask_rgba: (a: number) => [number, number];
export const demo_new: (a: number, b: number, c: number) => [number, number, number];
export const demo_prior_rgba: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_quality: (a: number) => [number, number];
export const demo_recon_rgba: (a: number) => [number, number];
export const demo_set_pattern: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
export const demo_side_rgba: (a: number) => [number, number];
export const demo_size: (a: number) => number;
export const demo_start: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number];
export const demo_step: (a: number, b: number) => [number, number, number];
export const demo_target_rgba: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
