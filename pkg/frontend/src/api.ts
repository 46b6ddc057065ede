/** Typed client for the labeling service HTTP API. */

import { readPngHeader } from "./png.js";

export interface AnnotationTask {
  task_id: string;
  sample_id: string;
  rank: number;
  status: string;
  target_prob: number;
  change_frac: number;
}

export interface NextTaskResult {
  drained: boolean;
  task?: AnnotationTask;
  images?: { t1: string; t2: string; hint: string };
  progress?: Progress;
}

export interface Progress {
  pending: number;
  in_progress: number;
  done: number;
}

export interface SubmitReceipt {
  task_id: string;
  version: number;
  stored: string;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class LabelServiceClient {
  constructor(
    readonly baseUrl: string,
    readonly annotator: string,
    readonly token?: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    const h: Record<string, string> = { "X-Annotator": this.annotator, ...extra };
    if (this.token) h["X-Auth-Token"] = this.token;
    return h;
  }

  private async json<T>(resp: Response): Promise<T> {
    const body = (await resp.json()) as T & { schema_version?: number; error?: string };
    if (!resp.ok) throw new ApiError(body.error ?? `HTTP ${resp.status}`, resp.status);
    if (body.schema_version !== 1) {
      throw new ApiError(`unsupported schema_version ${body.schema_version}`, resp.status);
    }
    return body;
  }

  async nextTask(): Promise<NextTaskResult> {
    const resp = await this.fetchFn(`${this.baseUrl}/tasks/next`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify({ annotator: this.annotator }),
    });
    return this.json<NextTaskResult>(resp);
  }

  async submitMask(taskId: string, png: Uint8Array): Promise<SubmitReceipt> {
    const resp = await this.fetchFn(`${this.baseUrl}/tasks/${taskId}/mask`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "image/png" }),
      body: png as unknown as BodyInit,
    });
    const body = await this.json<{ receipt: SubmitReceipt }>(resp);
    return body.receipt;
  }

  async progress(): Promise<Progress> {
    const resp = await this.fetchFn(`${this.baseUrl}/progress`, { headers: this.headers() });
    return (await this.json<{ progress: Progress }>(resp)).progress;
  }

  async exportLabels(outDir?: string): Promise<unknown> {
    const resp = await this.fetchFn(`${this.baseUrl}/export`, {
      method: "POST",
      headers: this.headers({ "Content-Type": "application/json" }),
      body: JSON.stringify(outDir ? { out_dir: outDir } : {}),
    });
    return (await this.json<{ manifest: unknown }>(resp)).manifest;
  }

  imageUrl(sampleId: string, which: "t1" | "t2" | "hint"): string {
    return `${this.baseUrl}/image/${sampleId}/${which}`;
  }

  async fetchImage(sampleId: string, which: "t1" | "t2" | "hint"): Promise<Uint8Array> {
    const resp = await this.fetchFn(this.imageUrl(sampleId, which), { headers: this.headers() });
    if (!resp.ok) throw new ApiError(`no ${which} image for ${sampleId}`, resp.status);
    return new Uint8Array(await resp.arrayBuffer());
  }

  /** Image dimensions from the PNG header alone (no decode). */
  async imageDims(sampleId: string): Promise<{ width: number; height: number }> {
    const bytes = await this.fetchImage(sampleId, "t1");
    const header = readPngHeader(bytes);
    return { width: header.width, height: header.height };
  }
}
