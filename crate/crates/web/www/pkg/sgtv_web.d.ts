/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    mask_rgba(): Uint8Array;
    constructor(size: number, contrast: string);
    prior_rgba(prior: string, eta: number): Uint8Array;
    /**
     * `[psnr_db, ssim]`, empty before the first step.
     */
    quality(): Float64Array;
    recon_rgba(): Uint8Array;
    set_pattern(kind: string, param: number, seed: bigint): number;
    side_rgba(): Uint8Array;
    size(): number;
    start(prior: string, alpha: number, eta: number, noise: number, seed: bigint): void;
    step(n: number): number;
    target_rgba(): Uint8Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_mask_rgba: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly demo_prior_rgba: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_quality: (a: number) => [number, number];
    readonly demo_recon_rgba: (a: number) => [number, number];
    readonly demo_set_pattern: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number];
    readonly demo_side_rgba: (a: number) => [number, number];
    readonly demo_size: (a: number) => number;
    readonly demo_start: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint) => [number, number];
    readonly demo_step: (a: number, b: number) => [number, number, number];
    readonly demo_target_rgba: (a: number) => [number, number];
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
