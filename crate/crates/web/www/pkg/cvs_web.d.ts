/* tslint:disable */
/* eslint-disable */

export class Checked {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Raw extracted watermark as grayscale PNG.
     */
    readonly extracted_png: Uint8Array | undefined;
    /**
     * Per-block signature error over the candidate, as PNG.
     */
    readonly heatmap_png: Uint8Array | undefined;
    /**
     * Report in the same JSON form as the command line tool.
     */
    readonly json: string;
    /**
     * Text lines as printed by the command line tool.
     */
    readonly text: string;
    readonly verdict: string;
}

/**
 * A master key and the records registered under it during this page's life.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Applies `kind` ("none", "brightness", "jpeg" or "patch") and returns PNG bytes.
     */
    distort(bytes: Uint8Array, kind: string, amount: number): Uint8Array;
    constructor(passphrase: string);
    /**
     * Watermarks an encoded image; `alpha <= 0` calibrates the strength automatically.
     */
    register(bytes: Uint8Array, who: string, alpha: number): Registered;
    verify(bytes: Uint8Array): Checked;
    readonly record_count: number;
}

export class Registered {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly alpha: number;
    readonly canonical: string;
    readonly id: string;
    /**
     * Watermarked image as PNG.
     */
    readonly png: Uint8Array;
    readonly psnr_db: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_checked_free: (a: number, b: number) => void;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly __wbg_registered_free: (a: number, b: number) => void;
    readonly checked_extracted_png: (a: number) => [number, number];
    readonly checked_heatmap_png: (a: number) => [number, number];
    readonly checked_json: (a: number) => [number, number];
    readonly checked_text: (a: number) => [number, number];
    readonly checked_verdict: (a: number) => [number, number];
    readonly demo_distort: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number) => number;
    readonly demo_record_count: (a: number) => number;
    readonly demo_register: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly demo_verify: (a: number, b: number, c: number) => [number, number, number];
    readonly registered_alpha: (a: number) => number;
    readonly registered_canonical: (a: number) => [number, number];
    readonly registered_id: (a: number) => [number, number];
    readonly registered_png: (a: number) => [number, number];
    readonly registered_psnr_db: (a: number) => number;
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
