import { describe, expect, it } from "vitest";

import { decodeMaskPng, decodePngGray, encodeMaskPng, readPngHeader } from "../src/png.js";
import { nodeDeflate, nodeInflate } from "../src/zlib_node.js";

function randomMask(w: number, h: number, seed = 7): Uint8Array {
  const out = new Uint8Array(w * h);
  let s = seed;
  for (let i = 0; i < out.length; i++) {
    s = (s * 1103515245 + 12345) & 0x7fffffff;
    out[i] = s % 3 === 0 ? 1 : 0;
  }
  return out;
}

describe("png codec", () => {
  it("encodes and decodes a mask bit-exactly", async () => {
    const mask = randomMask(37, 23);
    const png = await encodeMaskPng(37, 23, mask, nodeDeflate);
    expect(Array.from(png.subarray(0, 4))).toEqual([0x89, 0x50, 0x4e, 0x47]);
    const decoded = await decodeMaskPng(png, nodeInflate);
    expect(decoded.width).toBe(37);
    expect(decoded.height).toBe(23);
    expect(Array.from(decoded.mask)).toEqual(Array.from(mask));
  });

  it("reads dimensions from the header without decompressing", async () => {
    const png = await encodeMaskPng(64, 48, new Uint8Array(64 * 48), nodeDeflate);
    const header = readPngHeader(png.subarray(0, 33));
    expect(header).toMatchObject({ width: 64, height: 48, bitDepth: 8, colorType: 0 });
  });

  it("rejects non-png bytes", () => {
    expect(() => readPngHeader(Uint8Array.from([1, 2, 3, 4, 5, 6, 7, 8]))).toThrow(/not a PNG/);
  });

  it("decodes filtered grayscale rows (filters exercised via gradient image)", async () => {
    // decoder handles images from arbitrary encoders; build one per filter type
    const w = 5;
    const h = 4;
    const pixels = Uint8Array.from({ length: w * h }, (_, i) => (i * 13) % 256);
    // hand-build raw stream with per-row filters 0..3
    const raw = new Uint8Array(h * (w + 1));
    const filters = [0, 1, 2, 4];
    for (let y = 0; y < h; y++) {
      raw[y * (w + 1)] = filters[y];
      for (let x = 0; x < w; x++) {
        const v = pixels[y * w + x];
        const a = x > 0 ? pixels[y * w + x - 1] : 0;
        const b = y > 0 ? pixels[(y - 1) * w + x] : 0;
        const c = x > 0 && y > 0 ? pixels[(y - 1) * w + x - 1] : 0;
        let enc = v;
        if (filters[y] === 1) enc = v - a;
        else if (filters[y] === 2) enc = v - b;
        else if (filters[y] === 4) {
          const p = a + b - c;
          const pa = Math.abs(p - a);
          const pb = Math.abs(p - b);
          const pc = Math.abs(p - c);
          const pred = pa <= pb && pa <= pc ? a : pb <= pc ? b : c;
          enc = v - pred;
        }
        raw[y * (w + 1) + 1 + x] = enc & 0xff;
      }
    }
    // wrap as a PNG by reusing the encoder's chunk layout with our raw stream
    const template = await encodeMaskPng(w, h, new Uint8Array(w * h), nodeDeflate);
    const header = template.subarray(0, 33); // signature + IHDR
    const idatBody = nodeDeflate(raw);
    const chunkLen = idatBody.length;
    const idat = new Uint8Array(12 + chunkLen);
    const dv = new DataView(idat.buffer);
    dv.setUint32(0, chunkLen);
    idat.set([0x49, 0x44, 0x41, 0x54], 4);
    idat.set(idatBody, 8);
    // crc over type+body, copied from the codec's table via a round trip check
    const crcProbe = await encodeMaskPng(1, 1, Uint8Array.from([0]), nodeDeflate);
    expect(crcProbe.length).toBeGreaterThan(0);
    // assemble without CRC validation (decoder ignores CRCs)
    const iend = template.subarray(template.length - 12);
    const png = new Uint8Array(header.length + idat.length + iend.length);
    png.set(header, 0);
    png.set(idat, header.length);
    png.set(iend, header.length + idat.length);

    const decoded = await decodePngGray(png, nodeInflate);
    expect(Array.from(decoded.gray)).toEqual(Array.from(pixels));
  });

  it("averages RGB to grayscale", async () => {
    // build a tiny RGB png via the mask encoder is not possible; construct manually
    const w = 2;
    const h = 1;
    const rgb = Uint8Array.from([10, 20, 30, 200, 100, 0]);
    const raw = new Uint8Array(h * (w * 3 + 1));
    raw[0] = 0;
    raw.set(rgb, 1);
    const ihdr = new Uint8Array(13);
    const dv = new DataView(ihdr.buffer);
    dv.setUint32(0, w);
    dv.setUint32(4, h);
    ihdr[8] = 8;
    ihdr[9] = 2; // RGB
    // reuse encoder scaffolding: make a grayscale png then splice our IHDR+IDAT
    const template = await encodeMaskPng(w, h, new Uint8Array(w * h), nodeDeflate);
    const sig = template.subarray(0, 8);
    const mkChunk = (type: string, body: Uint8Array) => {
      const out = new Uint8Array(12 + body.length);
      const d = new DataView(out.buffer);
      d.setUint32(0, body.length);
      for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
      out.set(body, 8);
      return out; // decoder does not verify CRCs
    };
    const idat = mkChunk("IDAT", nodeDeflate(raw));
    const iend = mkChunk("IEND", new Uint8Array(0));
    const ihdrChunk = mkChunk("IHDR", ihdr);
    const png = new Uint8Array(sig.length + ihdrChunk.length + idat.length + iend.length);
    let off = 0;
    for (const part of [sig, ihdrChunk, idat, iend]) {
      png.set(part, off);
      off += part.length;
    }
    const decoded = await decodePngGray(png, nodeInflate);
    expect(Array.from(decoded.gray)).toEqual([20, 100]);
  });
});
