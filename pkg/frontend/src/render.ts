/** Canvas rendering: side-by-side frames, mask/hint overlay, zoom and pan. */

import { CanvasState } from "./state.js";

export interface ImagePair {
  t1: HTMLImageElement;
  t2: HTMLImageElement;
}

const MASK_COLOR = "rgba(255, 64, 64, 0.55)";
const HINT_COLOR = "rgba(64, 160, 255, 0.45)";

export class Viewer {
  private ctx1: CanvasRenderingContext2D;
  private ctx2: CanvasRenderingContext2D;
  sideBySide = true;
  showT2 = true; // toggle target frame when stacked

  constructor(canvas1: HTMLCanvasElement, private canvas2: HTMLCanvasElement) {
    this.ctx1 = canvas1.getContext("2d")!;
    this.ctx2 = canvas2.getContext("2d")!;
  }

  /** Map a mouse event on a canvas to image pixel coordinates. */
  toImageCoords(ev: MouseEvent, canvas: HTMLCanvasElement, st: CanvasState): { x: number; y: number } {
    const rect = canvas.getBoundingClientRect();
    const sx = (ev.clientX - rect.left) * (canvas.width / rect.width);
    const sy = (ev.clientY - rect.top) * (canvas.height / rect.height);
    return { x: (sx - st.panX) / st.zoom, y: (sy - st.panY) / st.zoom };
  }

  draw(st: CanvasState, images: ImagePair): void {
    this.canvas2.parentElement!.style.display = this.sideBySide ? "" : "none";
    const targets: Array<[CanvasRenderingContext2D, HTMLImageElement]> = this.sideBySide
      ? [
          [this.ctx1, images.t1],
          [this.ctx2, images.t2],
        ]
      : [[this.ctx1, this.showT2 ? images.t2 : images.t1]];
    for (const [ctx, img] of targets) {
      const canvas = ctx.canvas;
      ctx.setTransform(1, 0, 0, 1, 0, 0);
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      ctx.imageSmoothingEnabled = false;
      ctx.setTransform(st.zoom, 0, 0, st.zoom, st.panX, st.panY);
      ctx.drawImage(img, 0, 0);
      if (st.overlay !== "none") this.drawOverlay(ctx, st);
    }
  }

  private drawOverlay(ctx: CanvasRenderingContext2D, st: CanvasState): void {
    const raster = st.overlay === "hint" ? st.hint : st.mask;
    if (!raster) return;
    const tile = new OffscreenCanvas(raster.width, raster.height);
    const tctx = tile.getContext("2d")!;
    const img = tctx.createImageData(raster.width, raster.height);
    const [r, g, b, a] = st.overlay === "hint" ? [64, 160, 255, 115] : [255, 64, 64, 140];
    for (let i = 0; i < raster.data.length; i++) {
      if (raster.data[i]) {
        img.data[i * 4] = r;
        img.data[i * 4 + 1] = g;
        img.data[i * 4 + 2] = b;
        img.data[i * 4 + 3] = a;
      }
    }
    tctx.putImageData(img, 0, 0);
    ctx.drawImage(tile, 0, 0);
  }
}

export const COLORS = { MASK_COLOR, HINT_COLOR };
