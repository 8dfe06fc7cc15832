/* tslint:disable */
/* eslint-disable */

/**
 * One network session. Only the first step of the bundled model is
 * loaded so that the page starts from genuine intervals.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Runs one script line, such as a `conditional` or `explain`.
     */
    command(line: string): string;
    /**
     * Explanation tree of one bound (`"lower"` or `"upper"`).
     */
    explain(variable: string, state: string, bound: string): string;
    constructor();
    /**
     * Replaces the prior of `variable=state` with `[lo, hi]`.
     */
    set_prior(variable: string, state: string, lo: number, hi: number): string;
    /**
     * Current intervals as JSON.
     */
    view(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_command: (a: number, b: number, c: number) => [number, number];
    readonly demo_explain: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly demo_new: () => number;
    readonly demo_set_prior: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly demo_view: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
