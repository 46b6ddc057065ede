import { beforeEach, describe, expect, it, vi } from "vitest";

import { LabelServiceClient } from "../src/api.js";
import { AnnotationSession, DraftStore } from "../src/state.js";
import { decodeMaskPng, encodeMaskPng } from "../src/png.js";
import { nodeDeflate, nodeInflate } from "../src/zlib_node.js";

class MemoryStore implements DraftStore {
  map = new Map<string, string>();
  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}

const W = 16;
const H = 16;

function makeServer() {
  const submitted: Record<string, Uint8Array> = {};
  let taskServed = false;
  const t1png = encodeMaskPng(W, H, new Uint8Array(W * H), nodeDeflate);

  const fetchFn = vi.fn(async (url: string | URL | Request, init?: RequestInit) => {
    const u = String(url);
    const json = (status: number, body: unknown) =>
      new Response(JSON.stringify({ schema_version: 1, ...(body as object) }), {
        status,
        headers: { "Content-Type": "application/json" },
      });
    if (u.endsWith("/tasks/next")) {
      if (taskServed) return json(200, { drained: true, progress: { pending: 0, in_progress: 0, done: 1 } });
      taskServed = true;
      return json(200, {
        drained: false,
        task: { task_id: "task-s1", sample_id: "s1", rank: 1, status: "in_progress", target_prob: 0.9, change_frac: 0.1 },
        images: { t1: "/image/s1/t1", t2: "/image/s1/t2", hint: "/image/s1/hint" },
      });
    }
    if (u.includes("/image/s1/t1") || u.includes("/image/s1/t2")) {
      return new Response((await t1png) as unknown as BodyInit, { status: 200, headers: { "Content-Type": "image/png" } });
    }
    if (u.includes("/image/s1/hint")) {
      return json(404, { error: "no hint" });
    }
    if (u.includes("/mask")) {
      const body = init?.body as Uint8Array;
      submitted["task-s1"] = new Uint8Array(body);
      return json(200, { receipt: { task_id: "task-s1", version: 1, stored: "x" } });
    }
    if (u.endsWith("/progress")) {
      return json(200, { progress: { pending: 0, in_progress: 0, done: 1 } });
    }
    return json(404, { error: `no route ${u}` });
  });
  return { fetchFn: fetchFn as unknown as typeof fetch, submitted };
}

describe("AnnotationSession", () => {
  let store: MemoryStore;

  beforeEach(() => {
    store = new MemoryStore();
  });

  it("loads a task with a correctly sized empty mask", async () => {
    const { fetchFn } = makeServer();
    const client = new LabelServiceClient("http://svc", "alice", undefined, fetchFn);
    const session = new AnnotationSession(client, store, nodeDeflate, nodeInflate);
    const result = await session.loadNextTask();
    expect(result.kind).toBe("task");
    if (result.kind !== "task") return;
    expect(result.state.mask.width).toBe(W);
    expect(result.state.mask.count()).toBe(0);
    expect(result.state.task.rank).toBe(1);
  });

  it("paints, saves drafts, submits, and round-trips the exact raster", async () => {
    const { fetchFn, submitted } = makeServer();
    const client = new LabelServiceClient("http://svc", "alice", undefined, fetchFn);
    const session = new AnnotationSession(client, store, nodeDeflate, nodeInflate);
    await session.loadNextTask();

    session.paint([{ x: 3, y: 3 }, { x: 10, y: 12 }]);
    expect(session.hasDraft()).toBe(true);
    const raster = Uint8Array.from(session.state!.mask.data);
    expect(raster.reduce((a, b) => a + b, 0)).toBeGreaterThan(0);

    const receipt = await session.submit();
    expect(receipt.version).toBe(1);
    expect(session.state).toBeNull();
    expect(store.map.size).toBe(0); // draft cleared

    const decoded = await decodeMaskPng(submitted["task-s1"], nodeInflate);
    expect(Array.from(decoded.mask)).toEqual(Array.from(raster));
  });

  it("reports drained with progress when the queue is empty", async () => {
    const { fetchFn } = makeServer();
    const client = new LabelServiceClient("http://svc", "alice", undefined, fetchFn);
    const session = new AnnotationSession(client, store, nodeDeflate, nodeInflate);
    await session.loadNextTask();
    await session.submit(true);
    const result = await session.loadNextTask();
    expect(result.kind).toBe("drained");
    if (result.kind === "drained") expect(result.progress.done).toBe(1);
  });

  it("restores a draft after reload", async () => {
    const server = makeServer();
    const client = new LabelServiceClient("http://svc", "alice", undefined, server.fetchFn);
    const session = new AnnotationSession(client, store, nodeDeflate, nodeInflate);
    await session.loadNextTask();
    session.paint([{ x: 5, y: 5 }]);
    const painted = Uint8Array.from(session.state!.mask.data);

    // a fresh session against a fresh server (same store) restores the draft
    const server2 = makeServer();
    const client2 = new LabelServiceClient("http://svc", "alice", undefined, server2.fetchFn);
    const session2 = new AnnotationSession(client2, store, nodeDeflate, nodeInflate);
    const result = await session2.loadNextTask();
    expect(result.kind).toBe("task");
    expect(Array.from(session2.state!.mask.data)).toEqual(Array.from(painted));
  });

  it("keeps the local mask when submit fails", async () => {
    const { fetchFn } = makeServer();
    const failing = vi.fn(async (url: string | URL | Request, init?: RequestInit) => {
      if (String(url).includes("/mask")) {
        return new Response(JSON.stringify({ schema_version: 1, error: "boom" }), { status: 500 });
      }
      return (fetchFn as unknown as (u: unknown, i?: unknown) => Promise<Response>)(url, init);
    });
    const client = new LabelServiceClient("http://svc", "alice", undefined, failing as unknown as typeof fetch);
    const session = new AnnotationSession(client, store, nodeDeflate, nodeInflate);
    await session.loadNextTask();
    session.paint([{ x: 2, y: 2 }]);
    const before = Uint8Array.from(session.state!.mask.data);
    await expect(session.submit()).rejects.toThrow();
    expect(session.state).not.toBeNull();
    expect(Array.from(session.state!.mask.data)).toEqual(Array.from(before));
    expect(session.hasDraft()).toBe(true);
    expect(session.lastError).toContain("boom");
  });

  it("undo goes through the session and updates the draft", async () => {
    const { fetchFn } = makeServer();
    const client = new LabelServiceClient("http://svc", "alice", undefined, fetchFn);
    const session = new AnnotationSession(client, store, nodeDeflate, nodeInflate);
    await session.loadNextTask();
    session.paint([{ x: 4, y: 4 }]);
    expect(session.state!.mask.count()).toBeGreaterThan(0);
    expect(session.undo()).toBe(true);
    expect(session.state!.mask.count()).toBe(0);
  });
});
