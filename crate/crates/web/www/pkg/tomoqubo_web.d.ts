/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    fbp(): Reconstruction;
    /**
     * Single-level Shepp-Logan phantom of `size × size`, blurred by `blur`
     * and thresholded at `threshold`, projected at `projections` angles.
     * A positive `noise` adds relative Gaussian noise drawn from `seed`.
     */
    constructor(size: number, blur: number, threshold: number, projections: number, noise: number, seed: bigint);
    phantom(): Float64Array;
    /**
     * Anneal `a·Q1 + b·Q2` and decode the best assignment.
     */
    reconstruct(a: number, b: number, restarts: number, sweeps: number, seed: bigint): Reconstruction;
    sart(iterations: number): Reconstruction;
    /**
     * Row-major, one row per angle.
     */
    sinogram(): Float64Array;
    readonly angles: number;
    readonly bins: number;
    readonly size: number;
}

/**
 * One reconstructed image with its scores.
 */
export class Reconstruction {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    pixels(): Float64Array;
    readonly abs_error: number;
    /**
     * Energy reached by the solver, `NaN` for the classical baselines.
     */
    readonly energy: number;
    readonly error_free: boolean;
    /**
     * Energy of the true image in the same model, `NaN` for the baselines.
     */
    readonly target_energy: number;
    readonly tv_squared: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_reconstruction_free: (a: number, b: number) => void;
    readonly demo_angles: (a: number) => number;
    readonly demo_bins: (a: number) => number;
    readonly demo_fbp: (a: number) => [number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly demo_phantom: (a: number) => [number, number];
    readonly demo_reconstruct: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly demo_sart: (a: number, b: number) => [number, number, number];
    readonly demo_sinogram: (a: number) => [number, number];
    readonly demo_size: (a: number) => number;
    readonly reconstruction_abs_error: (a: number) => number;
    readonly reconstruction_energy: (a: number) => number;
    readonly reconstruction_error_free: (a: number) => number;
    readonly reconstruction_pixels: (a: number) => [number, number];
    readonly reconstruction_target_energy: (a: number) => number;
    readonly reconstruction_tv_squared: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
