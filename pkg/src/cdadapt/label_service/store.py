"""Annotation task store: a file tree plus a single append-only journal.

All task-state mutations append a journal record and the full state rebuilds by
replay, so queue ordering and lease state survive restarts. Submitted masks are
versioned files; export writes only the latest mask of each done task.
"""

from __future__ import annotations

import io
import json
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..data.io import write_mask

SCHEMA_VERSION = 1

DEFAULT_LEASE_SECONDS = 30 * 60


@dataclass
class AnnotationTask:
    task_id: str
    sample_id: str
    rank: int
    status: str  # pending | in_progress | done
    target_prob: float
    change_frac: float
    created_at: float
    updated_at: float
    lease_annotator: str | None = None
    lease_expires: float | None = None
    mask_version: int = 0
    annotators: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class LabelStore:
    def __init__(
        self,
        store_dir: str | Path,
        data_root: str | Path,
        hints_dir: str | Path | None = None,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        now_fn=time.time,
    ):
        self.store_dir = Path(store_dir)
        self.data_root = Path(data_root)
        self.hints_dir = Path(hints_dir) if hints_dir else None
        self.lease_seconds = lease_seconds
        self.now_fn = now_fn
        self._lock = threading.Lock()
        self.tasks: dict[str, AnnotationTask] = {}
        self.exported = False
        self.store_dir.mkdir(parents=True, exist_ok=True)
        (self.store_dir / "masks").mkdir(exist_ok=True)
        self._journal_path = self.store_dir / "journal.jsonl"
        self._replay()

    # -- journal -----------------------------------------------------------

    def _append(self, event: dict) -> None:
        event["ts"] = self.now_fn()
        with open(self._journal_path, "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay(self) -> None:
        if not self._journal_path.exists():
            return
        with open(self._journal_path) as fh:
            for line in fh:
                self._apply(json.loads(line))

    def _apply(self, ev: dict) -> None:
        kind = ev["event"]
        if kind == "task_created":
            t = ev["task"]
            self.tasks[t["task_id"]] = AnnotationTask(**t)
        elif kind == "lease_acquired":
            t = self.tasks[ev["task_id"]]
            t.status = "in_progress"
            t.lease_annotator = ev["annotator"]
            t.lease_expires = ev["expires"]
            t.updated_at = ev["ts"]
        elif kind == "lease_reverted":
            t = self.tasks[ev["task_id"]]
            t.status = "pending"
            t.lease_annotator = None
            t.lease_expires = None
            t.updated_at = ev["ts"]
        elif kind == "mask_submitted":
            t = self.tasks[ev["task_id"]]
            t.status = "done"
            t.lease_annotator = None
            t.lease_expires = None
            t.mask_version = ev["version"]
            t.updated_at = ev["ts"]
            if ev["annotator"] not in t.annotators:
                t.annotators.append(ev["annotator"])
        elif kind == "exported":
            self.exported = True

    # -- queue -------------------------------------------------------------

    def create_tasks(self, report_rows: list[dict]) -> list[AnnotationTask]:
        """One pending task per selected sample; re-import of the same ids is a no-op."""
        ids = [r["sample_id"] for r in report_rows]
        if len(set(ids)) != len(ids):
            raise ValueError("selection report contains duplicate sample ids")
        with self._lock:
            existing = {t.sample_id for t in self.tasks.values()}
            new_rows = [r for r in sorted(report_rows, key=lambda r: r["rank"]) if r["sample_id"] not in existing]
            now = self.now_fn()
            created = []
            for r in new_rows:
                task = AnnotationTask(
                    task_id=f"task-{r['sample_id']}",
                    sample_id=r["sample_id"],
                    rank=r["rank"],
                    status="pending",
                    target_prob=float(r.get("target_prob", 0.0)),
                    change_frac=float(r.get("change_frac", 0.0)),
                    created_at=now,
                    updated_at=now,
                )
                self.tasks[task.task_id] = task
                self._append({"event": "task_created", "task": task.to_dict()})
                created.append(task)
            ranks = sorted(t.rank for t in self.tasks.values())
            if ranks != list(range(1, len(ranks) + 1)):
                raise ValueError(f"task ranks must be dense 1..k, got {ranks}")
            return created

    def _expire_leases(self) -> None:
        now = self.now_fn()
        for t in self.tasks.values():
            if t.status == "in_progress" and t.lease_expires is not None and t.lease_expires <= now:
                t.status = "pending"
                t.lease_annotator = None
                t.lease_expires = None
                t.updated_at = now
                self._append({"event": "lease_reverted", "task_id": t.task_id})

    def next_task(self, annotator: str) -> AnnotationTask | None:
        """Lease the lowest-rank pending task; None when the queue is drained.

        An annotator who already holds a live lease gets that task back (lease
        renewed), so a reloaded client resumes instead of stalling its task.
        """
        with self._lock:
            self._expire_leases()
            mine = [
                t for t in self.tasks.values()
                if t.status == "in_progress" and t.lease_annotator == annotator
            ]
            pending = sorted(
                (t for t in self.tasks.values() if t.status == "pending"), key=lambda t: t.rank
            )
            if mine:
                task = min(mine, key=lambda t: t.rank)
            elif pending:
                task = pending[0]
            else:
                return None
            task.status = "in_progress"
            task.lease_annotator = annotator
            task.lease_expires = self.now_fn() + self.lease_seconds
            task.updated_at = self.now_fn()
            self._append(
                {
                    "event": "lease_acquired",
                    "task_id": task.task_id,
                    "annotator": annotator,
                    "expires": task.lease_expires,
                }
            )
            return task

    # -- masks ---------------------------------------------------------------

    def sample_dims(self, sample_id: str) -> tuple[int, int]:
        path = self.image_path(sample_id, "t1")
        with Image.open(path) as im:
            return im.height, im.width

    def image_path(self, sample_id: str, which: str) -> Path:
        if which == "t1":
            return self.data_root / "A" / f"{sample_id}.png"
        if which == "t2":
            return self.data_root / "B" / f"{sample_id}.png"
        if which == "hint":
            if self.hints_dir is None:
                raise FileNotFoundError("no hints directory configured")
            return self.hints_dir / f"{sample_id}.png"
        raise ValueError(f"unknown image kind {which!r} (expected t1, t2, or hint)")

    def submit_mask(self, task_id: str, png_bytes: bytes, annotator: str) -> dict:
        """Store one mask submission; task must be leased by the annotator (or done)."""
        with self._lock:
            if task_id not in self.tasks:
                raise KeyError(f"unknown task {task_id!r}")
            task = self.tasks[task_id]
            self._expire_leases()
            if self.exported:
                raise PermissionError("labels already exported; submissions are closed")
            if task.status == "in_progress" and task.lease_annotator != annotator:
                raise PermissionError(f"task is leased to {task.lease_annotator!r}")
            if task.status == "pending":
                raise PermissionError("task is not leased; call next_task first")

            with Image.open(io.BytesIO(png_bytes)) as im:
                arr = np.asarray(im.convert("L"))
            mask = (arr > 127).astype(np.uint8)
            expected = self.sample_dims(task.sample_id)
            if mask.shape != expected:
                raise ValueError(
                    f"mask is {mask.shape[0]}x{mask.shape[1]} but the sample is "
                    f"{expected[0]}x{expected[1]}"
                )
            version = task.mask_version + 1
            mask_path = self.store_dir / "masks" / f"{task.task_id}_v{version}.png"
            write_mask(mask_path, mask)
            task.status = "done"
            task.mask_version = version
            task.lease_annotator = None
            task.lease_expires = None
            task.updated_at = self.now_fn()
            if annotator not in task.annotators:
                task.annotators.append(annotator)
            self._append(
                {
                    "event": "mask_submitted",
                    "task_id": task.task_id,
                    "annotator": annotator,
                    "version": version,
                    "path": str(mask_path),
                }
            )
            return {"task_id": task.task_id, "version": version, "stored": str(mask_path)}

    def latest_mask_path(self, task: AnnotationTask) -> Path:
        return self.store_dir / "masks" / f"{task.task_id}_v{task.mask_version}.png"

    # -- export --------------------------------------------------------------

    def export_labels(self, out_dir: str | Path) -> dict:
        """Write A/B/label triplets for done tasks; byte-stable given the same inputs."""
        with self._lock:
            done = sorted((t for t in self.tasks.values() if t.status == "done"), key=lambda t: t.rank)
            if not done:
                raise ValueError("no completed tasks to export")
            out_dir = Path(out_dir)
            for sub in ("A", "B", "label"):
                (out_dir / sub).mkdir(parents=True, exist_ok=True)
            for t in done:
                for which, sub in (("t1", "A"), ("t2", "B")):
                    data = self.image_path(t.sample_id, which).read_bytes()
                    (out_dir / sub / f"{t.sample_id}.png").write_bytes(data)
                (out_dir / "label" / f"{t.sample_id}.png").write_bytes(
                    self.latest_mask_path(t).read_bytes()
                )
            missing = sorted(
                (t.sample_id for t in self.tasks.values() if t.status != "done")
            )
            manifest = {
                "schema_version": SCHEMA_VERSION,
                "exported": len(done),
                "missing": missing,
                "samples": [
                    {"sample_id": t.sample_id, "rank": t.rank, "annotators": t.annotators}
                    for t in done
                ],
            }
            with open(out_dir / "manifest.json", "w") as fh:
                json.dump(manifest, fh, indent=2, sort_keys=True)
            self.exported = True
            self._append({"event": "exported", "out_dir": str(out_dir)})
            return manifest

    # -- views ---------------------------------------------------------------

    def progress(self) -> dict:
        with self._lock:
            self._expire_leases()
            counts = {"pending": 0, "in_progress": 0, "done": 0}
            for t in self.tasks.values():
                counts[t.status] += 1
            return counts

    def tasks_summary(self) -> list[dict]:
        with self._lock:
            self._expire_leases()
            return [t.to_dict() for t in sorted(self.tasks.values(), key=lambda t: t.rank)]
