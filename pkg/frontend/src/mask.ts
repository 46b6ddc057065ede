/**
 * Binary mask raster with paint tools and undo.
 *
 * The raster only ever holds 0 or 1 per pixel. Every edit group (one stroke,
 * one polygon, one fill) pushes an undo snapshot; undo depth is capped but
 * always at least 20.
 */

export type Tool = "brush" | "eraser" | "polygon" | "fill";

export interface Point {
  x: number;
  y: number;
}

const UNDO_DEPTH = 50;

export class MaskRaster {
  readonly width: number;
  readonly height: number;
  data: Uint8Array;
  private undoStack: Uint8Array[] = [];

  constructor(width: number, height: number, data?: Uint8Array) {
    if (width < 1 || height < 1) throw new Error(`bad raster dims ${width}x${height}`);
    this.width = width;
    this.height = height;
    this.data = data ? Uint8Array.from(data) : new Uint8Array(width * height);
    for (const v of this.data) {
      if (v !== 0 && v !== 1) throw new Error("mask raster must be strictly binary");
    }
  }

  clone(): MaskRaster {
    return new MaskRaster(this.width, this.height, this.data);
  }

  get(x: number, y: number): number {
    return this.data[y * this.width + x];
  }

  count(): number {
    let n = 0;
    for (const v of this.data) n += v;
    return n;
  }

  isBinary(): boolean {
    return this.data.every((v) => v === 0 || v === 1);
  }

  /** Call once before an edit group so undo() restores the pre-edit state. */
  beginEdit(): void {
    this.undoStack.push(Uint8Array.from(this.data));
    if (this.undoStack.length > UNDO_DEPTH) this.undoStack.shift();
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (!prev) return false;
    this.data = prev;
    return true;
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  stampCircle(cx: number, cy: number, radius: number, value: 0 | 1): void {
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(cx - radius));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + radius));
    const y0 = Math.max(0, Math.floor(cy - radius));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + radius));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x + 0.5 - cx;
        const dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= r2) this.data[y * this.width + x] = value;
      }
    }
  }

  /** Brush / eraser stroke: stamps spaced densely along the path. */
  strokePath(path: Point[], radius: number, value: 0 | 1): void {
    if (path.length === 0) return;
    let prev = path[0];
    this.stampCircle(prev.x, prev.y, radius, value);
    for (const p of path.slice(1)) {
      const dist = Math.hypot(p.x - prev.x, p.y - prev.y);
      const steps = Math.max(1, Math.ceil(dist / Math.max(0.5, radius * 0.5)));
      for (let s = 1; s <= steps; s++) {
        const t = s / steps;
        this.stampCircle(prev.x + (p.x - prev.x) * t, prev.y + (p.y - prev.y) * t, radius, value);
      }
      prev = p;
    }
  }

  /** Even-odd scanline fill over pixel centers. */
  fillPolygon(points: Point[], value: 0 | 1): void {
    if (points.length < 3) return;
    const ys = points.map((p) => p.y);
    const yMin = Math.max(0, Math.floor(Math.min(...ys)));
    const yMax = Math.min(this.height - 1, Math.ceil(Math.max(...ys)));
    for (let y = yMin; y <= yMax; y++) {
      const cy = y + 0.5;
      const xs: number[] = [];
      for (let i = 0; i < points.length; i++) {
        const a = points[i];
        const b = points[(i + 1) % points.length];
        if (a.y === b.y) continue;
        const [lo, hi] = a.y < b.y ? [a, b] : [b, a];
        if (cy >= lo.y && cy < hi.y) {
          xs.push(lo.x + ((cy - lo.y) / (hi.y - lo.y)) * (hi.x - lo.x));
        }
      }
      xs.sort((p, q) => p - q);
      for (let i = 0; i + 1 < xs.length; i += 2) {
        const xStart = Math.max(0, Math.ceil(xs[i] - 0.5));
        const xEnd = Math.min(this.width - 1, Math.ceil(xs[i + 1] - 0.5) - 1);
        for (let x = xStart; x <= xEnd; x++) this.data[y * this.width + x] = value;
      }
    }
  }

  /** 4-connected flood fill starting at an integer pixel. */
  floodFill(x: number, y: number, value: 0 | 1): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const from = this.get(x, y);
    if (from === value) return;
    const queue: number[] = [y * this.width + x];
    this.data[queue[0]] = value;
    while (queue.length) {
      const idx = queue.pop()!;
      const px = idx % this.width;
      const py = (idx - px) / this.width;
      for (const [nx, ny] of [[px - 1, py], [px + 1, py], [px, py - 1], [px, py + 1]] as const) {
        if (nx < 0 || ny < 0 || nx >= this.width || ny >= this.height) continue;
        const nidx = ny * this.width + nx;
        if (this.data[nidx] === from) {
          this.data[nidx] = value;
          queue.push(nidx);
        }
      }
    }
  }

  setFrom(other: Uint8Array): void {
    if (other.length !== this.data.length) throw new Error("raster size mismatch");
    for (const v of other) {
      if (v !== 0 && v !== 1) throw new Error("mask raster must be strictly binary");
    }
    this.data = Uint8Array.from(other);
  }
}
