/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_checked_free: (a: number, b: number) => void;
export const __wbg_demo_free: (a: number, b: number) => void;
export const __wbg_registered_free: (a: number, b: number) => void;
export const checked_extracted_png: (a: number) => [number, number];
export const checked_heatmap_png: (a: number) => [number, number];
export const checked_json: (a: number) => [number, number];
export const checked_text: (a: number) => [number, number];
export const checked_verdict: (a: number) => [number, number];
export const demo_distort: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const demo_new: (a: number, b: number) => number;
export const demo_record_count: (a: number) => number;
export const demo_register: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const demo_verify: (a: number, b: number, c: number) => [number, number, number];
export const registered_alpha: (a: number) => number;
export const registered_canonical: (a: number) => [number, number];
export const registered_id: (a: number) => [number, number];
export const registered_png: (a: number) => [number, number];
export const registered_psnr_db: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
