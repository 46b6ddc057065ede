/**
 * Minimal PNG codec for binary masks.
 *
 * Encodes 8-bit grayscale images (masks as 0/255) and decodes 8-bit
 * grayscale / RGB / RGBA PNGs with standard scanline filters. Compression is
 * injected so the same code runs under node (zlib) and in the browser
 * (CompressionStream produces the required zlib wrapper).
 */

export type Deflate = (data: Uint8Array) => Uint8Array | Promise<Uint8Array>;
export type Inflate = (data: Uint8Array) => Uint8Array | Promise<Uint8Array>;

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(bytes: Uint8Array): number {
  let c = 0xffffffff;
  for (const b of bytes) c = CRC_TABLE[(c ^ b) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, body: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + body.length);
  const dv = new DataView(out.buffer);
  dv.setUint32(0, body.length);
  for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
  out.set(body, 8);
  dv.setUint32(8 + body.length, crc32(out.subarray(4, 8 + body.length)));
  return out;
}

/** Encode a {0,1} mask as an 8-bit grayscale PNG with values {0,255}. */
export async function encodeMaskPng(
  width: number,
  height: number,
  mask: Uint8Array,
  deflate: Deflate,
): Promise<Uint8Array> {
  if (mask.length !== width * height) throw new Error("mask size mismatch");
  const ihdr = new Uint8Array(13);
  const dv = new DataView(ihdr.buffer);
  dv.setUint32(0, width);
  dv.setUint32(4, height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 0; // grayscale
  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0; // filter: none
    for (let x = 0; x < width; x++) {
      raw[y * (width + 1) + 1 + x] = mask[y * width + x] ? 255 : 0;
    }
  }
  const idat = await deflate(raw);
  const parts = [
    Uint8Array.from(SIGNATURE),
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ];
  const total = parts.reduce((n, p) => n + p.length, 0);
  const out = new Uint8Array(total);
  let off = 0;
  for (const p of parts) {
    out.set(p, off);
    off += p.length;
  }
  return out;
}

export interface PngHeader {
  width: number;
  height: number;
  bitDepth: number;
  colorType: number;
}

/** Parse just the IHDR; needs no decompression, so it works anywhere. */
export function readPngHeader(bytes: Uint8Array): PngHeader {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG file");
  }
  const dv = new DataView(bytes.buffer, bytes.byteOffset);
  if (String.fromCharCode(...bytes.subarray(12, 16)) !== "IHDR") throw new Error("missing IHDR");
  return {
    width: dv.getUint32(16),
    height: dv.getUint32(20),
    bitDepth: bytes[24],
    colorType: bytes[25],
  };
}

const CHANNELS: Record<number, number> = { 0: 1, 2: 3, 4: 2, 6: 4 };

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

/** Decode an 8-bit PNG to grayscale (RGB/RGBA channels average). */
export async function decodePngGray(bytes: Uint8Array, inflate: Inflate): Promise<{
  width: number;
  height: number;
  gray: Uint8Array;
}> {
  const header = readPngHeader(bytes);
  if (header.bitDepth !== 8) throw new Error(`unsupported bit depth ${header.bitDepth}`);
  const nchan = CHANNELS[header.colorType];
  if (!nchan) throw new Error(`unsupported color type ${header.colorType}`);

  const dv = new DataView(bytes.buffer, bytes.byteOffset);
  let off = 8;
  const idat: Uint8Array[] = [];
  while (off < bytes.length) {
    const len = dv.getUint32(off);
    const type = String.fromCharCode(...bytes.subarray(off + 4, off + 8));
    if (type === "IDAT") idat.push(bytes.subarray(off + 8, off + 8 + len));
    if (type === "IEND") break;
    off += 12 + len;
  }
  const joined = new Uint8Array(idat.reduce((n, p) => n + p.length, 0));
  let joff = 0;
  for (const p of idat) {
    joined.set(p, joff);
    joff += p.length;
  }
  const raw = await inflate(joined);

  const { width, height } = header;
  const stride = width * nchan;
  const out = new Uint8Array(width * height * nchan);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    const prev = y > 0 ? out.subarray((y - 1) * stride, y * stride) : null;
    const cur = out.subarray(y * stride, (y + 1) * stride);
    for (let x = 0; x < stride; x++) {
      const a = x >= nchan ? cur[x - nchan] : 0;
      const b = prev ? prev[x] : 0;
      const c = prev && x >= nchan ? prev[x - nchan] : 0;
      let v = row[x];
      if (filter === 1) v += a;
      else if (filter === 2) v += b;
      else if (filter === 3) v += Math.floor((a + b) / 2);
      else if (filter === 4) v += paeth(a, b, c);
      else if (filter !== 0) throw new Error(`unsupported filter ${filter}`);
      cur[x] = v & 0xff;
    }
  }

  const gray = new Uint8Array(width * height);
  if (nchan === 1) {
    gray.set(out);
  } else {
    for (let i = 0; i < width * height; i++) {
      const base = i * nchan;
      gray[i] = Math.round((out[base] + out[base + 1] + out[base + 2]) / 3);
    }
  }
  return { width, height, gray };
}

/** Decode a stored 0/255 mask PNG back to a {0,1} raster. */
export async function decodeMaskPng(bytes: Uint8Array, inflate: Inflate): Promise<{
  width: number;
  height: number;
  mask: Uint8Array;
}> {
  const { width, height, gray } = await decodePngGray(bytes, inflate);
  const mask = new Uint8Array(gray.length);
  for (let i = 0; i < gray.length; i++) mask[i] = gray[i] > 127 ? 1 : 0;
  return { width, height, mask };
}
