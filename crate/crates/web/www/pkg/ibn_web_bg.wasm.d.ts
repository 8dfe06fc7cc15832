/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_command: (a: number, b: number, c: number) => [number, number];
export const demo_explain: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
export const demo_new: () => number;
export const demo_set_prior: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
export const demo_view: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
