/** Node compression adapters for the PNG codec (tests and CLI tooling). */

import { deflateSync, inflateSync } from "node:zlib";

export const nodeDeflate = (data: Uint8Array): Uint8Array => new Uint8Array(deflateSync(data));
export const nodeInflate = (data: Uint8Array): Uint8Array => new Uint8Array(inflateSync(data));
