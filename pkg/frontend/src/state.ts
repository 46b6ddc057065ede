/**
 * Annotation session flow: lease a task, paint, submit, repeat.
 *
 * Edits persist as drafts after every edit group, so navigation or a crash
 * never loses work; a failed submit keeps the local mask and offers a retry.
 */

import { LabelServiceClient, AnnotationTask, Progress, ApiError } from "./api.js";
import { MaskRaster, Point, Tool } from "./mask.js";
import { Deflate, Inflate, decodeMaskPng, encodeMaskPng } from "./png.js";

export interface DraftStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export type Overlay = "none" | "hint" | "mask";

export interface CanvasState {
  task: AnnotationTask;
  mask: MaskRaster;
  hint: MaskRaster | null;
  tool: Tool;
  brushRadius: number;
  overlay: Overlay;
  zoom: number;
  panX: number;
  panY: number;
  edited: boolean;
}

export type LoadResult =
  | { kind: "task"; state: CanvasState }
  | { kind: "drained"; progress: Progress };

function b64encode(data: Uint8Array): string {
  if (typeof Buffer !== "undefined") return Buffer.from(data).toString("base64");
  let s = "";
  for (const b of data) s += String.fromCharCode(b);
  return btoa(s);
}

function b64decode(s: string): Uint8Array {
  if (typeof Buffer !== "undefined") return new Uint8Array(Buffer.from(s, "base64"));
  const raw = atob(s);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

export class AnnotationSession {
  state: CanvasState | null = null;
  lastError: string | null = null;

  constructor(
    private client: LabelServiceClient,
    private drafts: DraftStore,
    private deflate: Deflate,
    private inflate?: Inflate,
  ) {}

  private draftKey(task: AnnotationTask): string {
    return `draft:${task.task_id}`;
  }

  /** Lease the next task and set up the canvas; restores any saved draft. */
  async loadNextTask(useHintAsInitial = false): Promise<LoadResult> {
    const result = await this.client.nextTask();
    if (result.drained || !result.task) {
      this.state = null;
      return { kind: "drained", progress: result.progress ?? (await this.client.progress()) };
    }
    const task = result.task;
    const dims = await this.client.imageDims(task.sample_id);
    const mask = new MaskRaster(dims.width, dims.height);

    let hint: MaskRaster | null = null;
    if (this.inflate) {
      try {
        const bytes = await this.client.fetchImage(task.sample_id, "hint");
        const decoded = await decodeMaskPng(bytes, this.inflate);
        hint = new MaskRaster(decoded.width, decoded.height, decoded.mask);
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 404)) throw err;
      }
    }

    const draft = this.drafts.getItem(this.draftKey(task));
    let edited = false;
    if (draft) {
      mask.setFrom(b64decode(draft));
      edited = true;
    } else if (useHintAsInitial && hint) {
      mask.setFrom(hint.data);
      edited = true;
    }

    this.state = {
      task,
      mask,
      hint,
      tool: "brush",
      brushRadius: 4,
      overlay: "mask",
      zoom: 1,
      panX: 0,
      panY: 0,
      edited,
    };
    return { kind: "task", state: this.state };
  }

  private require(): CanvasState {
    if (!this.state) throw new Error("no task loaded");
    return this.state;
  }

  /** Apply one edit group with the active tool; saves a draft afterwards. */
  paint(path: Point[]): void {
    const st = this.require();
    st.mask.beginEdit();
    switch (st.tool) {
      case "brush":
        st.mask.strokePath(path, st.brushRadius, 1);
        break;
      case "eraser":
        st.mask.strokePath(path, st.brushRadius, 0);
        break;
      case "polygon":
        st.mask.fillPolygon(path, 1);
        break;
      case "fill": {
        const p = path[path.length - 1];
        st.mask.floodFill(Math.floor(p.x), Math.floor(p.y), 1);
        break;
      }
    }
    st.edited = true;
    this.saveDraft();
  }

  undo(): boolean {
    const st = this.require();
    const undone = st.mask.undo();
    if (undone) this.saveDraft();
    return undone;
  }

  saveDraft(): void {
    const st = this.require();
    this.drafts.setItem(this.draftKey(st.task), b64encode(st.mask.data));
  }

  hasDraft(): boolean {
    const st = this.require();
    return this.drafts.getItem(this.draftKey(st.task)) !== null;
  }

  /** Encode and submit the mask; on success the draft clears and state resets. */
  async submit(confirmEmpty = false): Promise<{ version: number }> {
    const st = this.require();
    if (!st.edited && !confirmEmpty && st.mask.count() === 0) {
      throw new Error("mask is untouched; confirm an empty submission explicitly");
    }
    const png = await encodeMaskPng(st.mask.width, st.mask.height, st.mask.data, this.deflate);
    try {
      const receipt = await this.client.submitMask(st.task.task_id, png);
      this.drafts.removeItem(this.draftKey(st.task));
      this.state = null;
      this.lastError = null;
      return { version: receipt.version };
    } catch (err) {
      // keep the mask and the draft so the annotator can retry
      this.lastError = err instanceof Error ? err.message : String(err);
      this.saveDraft();
      throw err;
    }
  }
}
