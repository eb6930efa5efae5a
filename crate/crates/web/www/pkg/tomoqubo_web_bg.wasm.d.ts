/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_reconstruction_free: (a: number, b: number) => void;
export const demo_angles: (a: number) => number;
export const demo_bins: (a: number) => number;
export const demo_fbp: (a: number) => [number, number, number];
export const demo_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const demo_phantom: (a: number) => [number, number];
export const demo_reconstruct: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
export const demo_sart: (a: number, b: number) => [number, number, number];
export const demo_sinogram: (a: number) => [number, number];
export const demo_size: (a: number) => number;
export const reconstruction_abs_error: (a: number) => number;
export const reconstruction_energy: (a: number) => number;
export const reconstruction_error_free: (a: number) => number;
export const reconstruction_pixels: (a: number) => [number, number];
export const reconstruction_target_energy: (a: number) => number;
export const reconstruction_tv_squared: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
