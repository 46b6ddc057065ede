/**
 * Browser entry point: wires the session, viewer, tools, and keyboard map.
 *
 * Keys: b brush, e eraser, p polygon, f fill, h hint overlay, m mask overlay,
 * tab toggles side-by-side vs single-frame, [ ] brush size, ctrl+z undo,
 * enter submits.
 */

import { LabelServiceClient } from "./api.js";
import { Point } from "./mask.js";
import { AnnotationSession } from "./state.js";
import { Viewer } from "./render.js";

declare global {
  interface Window {
    session: AnnotationSession;
  }
}

async function browserDeflate(data: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([data as BufferSource]).stream().pipeThrough(new CompressionStream("deflate"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

async function browserInflate(data: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([data as BufferSource]).stream().pipeThrough(new DecompressionStream("deflate"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function bootstrap(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8765";
  const annotator = params.get("annotator") ?? "anonymous";
  const token = params.get("token") ?? undefined;
  const hintInitial = params.get("hint_initial") === "1";

  const client = new LabelServiceClient(base, annotator, token);
  const session = new AnnotationSession(client, localStorage, browserDeflate, browserInflate);
  window.session = session;

  const canvas1 = el<HTMLCanvasElement>("frame1");
  const canvas2 = el<HTMLCanvasElement>("frame2");
  const statusBar = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("banner");
  const doneScreen = el<HTMLDivElement>("done-screen");
  const viewer = new Viewer(canvas1, canvas2);

  const images = { t1: new Image(), t2: new Image() };
  let drawing = false;
  let path: Point[] = [];
  let polygonPath: Point[] = [];

  function redraw(): void {
    if (session.state) viewer.draw(session.state, images);
  }

  function setStatus(text: string): void {
    statusBar.textContent = text;
  }

  async function loadImages(sampleId: string): Promise<void> {
    await Promise.all(
      (["t1", "t2"] as const).map(
        (which) =>
          new Promise<void>((resolve, reject) => {
            const img = images[which];
            img.onload = () => resolve();
            img.onerror = () => reject(new Error(`failed to load ${which}`));
            img.crossOrigin = "anonymous";
            img.src = client.imageUrl(sampleId, which);
          }),
      ),
    );
    canvas1.width = canvas2.width = images.t1.width;
    canvas1.height = canvas2.height = images.t1.height;
  }

  async function next(): Promise<void> {
    banner.hidden = true;
    try {
      const result = await session.loadNextTask(hintInitial);
      if (result.kind === "drained") {
        setStatus(
          `queue drained - done ${result.progress.done}, pending ${result.progress.pending}`,
        );
        doneScreen.hidden = false;
        return;
      }
      const { task } = result.state;
      await loadImages(task.sample_id);
      setStatus(`task ${task.rank} (${task.sample_id}) -- brush`);
      redraw();
    } catch (err) {
      // no state is lost: drafts stay in localStorage and the lease re-serves
      banner.hidden = false;
      banner.textContent = `service unreachable: ${err}. Retry below; nothing was lost.`;
    }
  }

  async function submit(): Promise<void> {
    if (!session.state) return;
    try {
      await session.submit(true);
      const progress = await client.progress();
      setStatus(`submitted - done ${progress.done}`);
      await next();
    } catch (err) {
      banner.hidden = false;
      banner.textContent = `submit failed: ${err}. Your mask is unchanged; retry when ready.`;
    }
  }

  canvas1.addEventListener("mousedown", (ev) => {
    const st = session.state;
    if (!st) return;
    const p = viewer.toImageCoords(ev, canvas1, st);
    if (st.tool === "polygon") {
      polygonPath.push(p);
      setStatus(`polygon: ${polygonPath.length} vertices (double-click to close)`);
      return;
    }
    drawing = true;
    path = [p];
  });
  canvas1.addEventListener("mousemove", (ev) => {
    const st = session.state;
    if (!drawing || !st) return;
    path.push(viewer.toImageCoords(ev, canvas1, st));
  });
  window.addEventListener("mouseup", () => {
    const st = session.state;
    if (drawing && st && path.length) {
      session.paint(path);
      redraw();
    }
    drawing = false;
    path = [];
  });
  canvas1.addEventListener("dblclick", () => {
    const st = session.state;
    if (st && st.tool === "polygon" && polygonPath.length >= 3) {
      session.paint(polygonPath);
      polygonPath = [];
      redraw();
    }
  });
  canvas1.addEventListener("wheel", (ev) => {
    const st = session.state;
    if (!st) return;
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
    st.zoom = Math.min(16, Math.max(0.25, st.zoom * factor));
    redraw();
  });

  window.addEventListener("keydown", (ev) => {
    const st = session.state;
    if (!st) return;
    if (ev.key === "z" && (ev.ctrlKey || ev.metaKey)) {
      session.undo();
    } else if (ev.key === "b") st.tool = "brush";
    else if (ev.key === "e") st.tool = "eraser";
    else if (ev.key === "p") st.tool = "polygon";
    else if (ev.key === "f") st.tool = "fill";
    else if (ev.key === "h") st.overlay = st.overlay === "hint" ? "mask" : "hint";
    else if (ev.key === "m") st.overlay = st.overlay === "mask" ? "none" : "mask";
    else if (ev.key === "Tab") {
      ev.preventDefault();
      viewer.sideBySide = !viewer.sideBySide;
      viewer.showT2 = true;
    } else if (ev.key === "[") st.brushRadius = Math.max(1, st.brushRadius - 1);
    else if (ev.key === "]") st.brushRadius = Math.min(64, st.brushRadius + 1);
    else if (ev.key === "Enter") {
      void submit();
      return;
    } else {
      return;
    }
    setStatus(`task ${st.task.rank} (${st.task.sample_id}) -- ${st.tool} r=${st.brushRadius}`);
    redraw();
  });

  window.addEventListener("beforeunload", (ev) => {
    // drafts persist automatically; only warn if an edit somehow outran the store
    if (session.state?.edited && !session.hasDraft()) ev.preventDefault();
  });

  el<HTMLButtonElement>("btn-submit").addEventListener("click", () => void submit());
  el<HTMLButtonElement>("btn-undo").addEventListener("click", () => {
    session.undo();
    redraw();
  });
  el<HTMLButtonElement>("btn-retry").addEventListener("click", () => void next());

  await next();
}

void bootstrap();
