"""HTTP service: pipeline jobs, clip lookup, annotation, calibration.

State is process-local.  Labels are the one thing that must survive a
crash, so every accepted label is appended to a JSONL file and fsynced
before the response goes out; restarting the service replays the file.

Each annotation task is shown to exactly two distinct annotators,
assigned round-robin over the configured annotator pool.  A repeat
submission, a third annotator, or an unassigned annotator gets 409.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import quality
from .config import config_from_dict
from .corpus import load_manifest, read_shards
from .errors import CapfuseError, ConfigError, ManifestError
from .pipeline import PipelineRunner, STATUS_FUSED

ANNOTATORS_PER_TASK = 2
ALLOWED_ERROR_VALUES = (0, 0.5, 1)


@dataclass
class Task:
    task_id: str
    clip_id: str
    caption: str
    flagged_phrases: list[dict]
    audio_url: str
    assigned: list[str] = field(default_factory=list)


def _validate_task(raw: dict) -> Task:
    caption = raw["caption"]
    phrases = raw.get("flagged_phrases", [])
    for span in phrases:
        start, end = span["start"], span["end"]
        if not (0 <= start < end <= len(caption)):
            raise ValueError(
                f"task {raw['task_id']}: span [{start}, {end}) outside caption of length {len(caption)}"
            )
    return Task(
        task_id=str(raw["task_id"]),
        clip_id=str(raw["clip_id"]),
        caption=caption,
        flagged_phrases=[{"start": s["start"], "end": s["end"]} for s in phrases],
        audio_url=str(raw.get("audio_url", "")),
    )


class LabelStore:
    """Append-only JSONL label log; fsynced per append, replayed on start."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.rows: list[dict] = []
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self.rows.append(json.loads(line))

    def append(self, row: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.rows.append(row)

    def for_task(self, task_id: str) -> list[dict]:
        return [r for r in self.rows if r["task_id"] == task_id]


@dataclass
class ServiceState:
    annotators: list[str]
    label_store: LabelStore
    tasks: dict[str, Task] = field(default_factory=dict)
    clips: dict[str, dict] = field(default_factory=dict)
    jobs: dict[str, dict] = field(default_factory=dict)
    calibration_report: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def load_tasks(self, path: str | Path) -> int:
        order = 0
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                task = _validate_task(json.loads(line))
                if task.task_id in self.tasks:
                    raise ValueError(f"duplicate task_id {task.task_id!r}")
                n = len(self.annotators)
                task.assigned = [self.annotators[(order + j) % n] for j in range(ANNOTATORS_PER_TASK)]
                self.tasks[task.task_id] = task
                order += 1
        return order

    def load_shards(self, shards_dir: str | Path) -> int:
        count = 0
        for record in read_shards(shards_dir):
            self.clips[record.clip_id] = record.to_dict()
            count += 1
        return count


def _error(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse({"error": message, **extra}, status_code=status)


def create_app(state: ServiceState, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="capfuse service")

    # -- pipeline jobs ---------------------------------------------------

    @app.post("/jobs")
    async def submit_job(request: Request):
        body = await request.json()
        try:
            config = config_from_dict(body.get("config", {}))
        except ConfigError as exc:
            return _error(400, str(exc), field=exc.field)
        manifest_path = body.get("manifest")
        out_dir = body.get("out_dir")
        if not manifest_path or not out_dir:
            return _error(400, "manifest and out_dir are required")
        try:
            records = load_manifest(manifest_path)
        except (ManifestError, OSError) as exc:
            return _error(400, f"manifest: {exc}")
        limit = body.get("limit")
        job_id = uuid.uuid4().hex[:12]
        with state.lock:
            state.jobs[job_id] = {"job_id": job_id, "status": "running", "summary": None, "error": None}

        def work():
            try:
                runner = PipelineRunner(config)
                result = runner.run(records, out_dir, limit=limit)
                with state.lock:
                    for outcome in result.outcomes.values():
                        if outcome.status == STATUS_FUSED:
                            state.clips[outcome.clip_id] = {
                                "clip_id": outcome.clip_id,
                                "caption": outcome.caption,
                                "ambiguities": outcome.ambiguities,
                                "cosine": outcome.cosine,
                                "kept": outcome.cosine >= config.similarity_threshold,
                                "cue_bundle": outcome.cue_bundle,
                            }
                    state.jobs[job_id].update(status="done", summary=result.summary.to_dict())
            except Exception as exc:
                with state.lock:
                    state.jobs[job_id].update(status="failed", error=str(exc))

        threading.Thread(target=work, daemon=True).start()
        return JSONResponse({"job_id": job_id, "status": "running"}, status_code=202)

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            return _error(404, f"no job {job_id!r}")
        return job

    @app.get("/clips/{clip_id}")
    def get_clip(clip_id: str):
        clip = state.clips.get(clip_id)
        if clip is None:
            return _error(404, f"no clip {clip_id!r}")
        return clip

    # -- annotation ------------------------------------------------------

    @app.get("/bootstrap")
    def bootstrap():
        return {
            "annotators": state.annotators,
            "task_count": len(state.tasks),
            "annotators_per_task": ANNOTATORS_PER_TASK,
        }

    @app.get("/annotation/tasks")
    def annotation_tasks(annotator: str):
        if annotator not in state.annotators:
            return _error(404, f"unknown annotator {annotator!r}")
        pending = []
        with state.lock:
            for task in state.tasks.values():
                if annotator not in task.assigned:
                    continue
                if any(r["annotator_id"] == annotator for r in state.label_store.for_task(task.task_id)):
                    continue
                pending.append(
                    {
                        "task_id": task.task_id,
                        "clip_id": task.clip_id,
                        "caption": task.caption,
                        "flagged_phrases": task.flagged_phrases,
                        "audio_url": task.audio_url,
                    }
                )
        return {"annotator": annotator, "tasks": pending}

    @app.post("/annotation/labels")
    async def submit_label(request: Request):
        body = await request.json()
        task_id = body.get("task_id")
        annotator_id = body.get("annotator_id")
        task = state.tasks.get(task_id)
        if task is None:
            return _error(404, f"no task {task_id!r}")
        detailness = body.get("detailness")
        if not isinstance(detailness, int) or not 1 <= detailness <= 3:
            return _error(400, "detailness must be an integer in 1..3")
        phrase_errors = body.get("phrase_errors")
        extra_units = body.get("extra_units", [])
        if not isinstance(phrase_errors, list) or not isinstance(extra_units, list):
            return _error(400, "phrase_errors and extra_units must be lists")
        if not all(isinstance(u, str) and u.strip() for u in extra_units):
            return _error(400, "extra_units must be non-empty strings")
        if any(v not in ALLOWED_ERROR_VALUES for v in phrase_errors):
            return _error(400, "phrase_errors values must be 0, 0.5 or 1")
        expected = len(task.flagged_phrases) + len(extra_units)
        if len(phrase_errors) != expected:
            return _error(
                400,
                f"phrase_errors must cover every flagged phrase plus extra units: "
                f"expected {expected} values, got {len(phrase_errors)}",
            )
        with state.lock:
            existing = state.label_store.for_task(task_id)
            if any(r["annotator_id"] == annotator_id for r in existing):
                return _error(409, f"annotator {annotator_id!r} already labeled task {task_id!r}")
            if len(existing) >= ANNOTATORS_PER_TASK:
                return _error(409, f"task {task_id!r} already has {ANNOTATORS_PER_TASK} labels")
            if annotator_id not in task.assigned:
                return _error(409, f"annotator {annotator_id!r} is not assigned to task {task_id!r}")
            rate = quality.hallucination_rate(phrase_errors) if phrase_errors else None
            score = quality.bucket_score(rate) if rate is not None else 5
            binarized = quality.binarize_score(score)
            row = {
                "task_id": task_id,
                "clip_id": task.clip_id,
                "annotator_id": annotator_id,
                "detailness": detailness,
                "phrase_errors": phrase_errors,
                "extra_units": extra_units,
                "rate": float(rate) if rate is not None else 0.0,
                "score": score,
                "binarized": binarized,
            }
            # Durable before visible: the response only exists once the row
            # is on disk.
            state.label_store.append(row)
        return JSONResponse(
            {
                "task_id": task_id,
                "annotator_id": annotator_id,
                "rate": row["rate"],
                "score": score,
                "binarized": binarized,
                "labels_for_task": len(existing) + 1,
            },
            status_code=201,
        )

    # -- aggregate stats -------------------------------------------------

    @app.get("/stats")
    def stats():
        with state.lock:
            rows = list(state.label_store.rows)
            per_task: dict[str, list[dict]] = {}
            for r in rows:
                per_task.setdefault(r["task_id"], []).append(r)
            complete = [v for v in per_task.values() if len(v) == ANNOTATORS_PER_TASK]
            score_pairs = [(a["score"], b["score"]) for a, b in complete]
            bin_pairs = [(a["binarized"], b["binarized"]) for a, b in complete]
            out = {
                "tasks": len(state.tasks),
                "clips": len(state.clips),
                "labels": len(rows),
                "tasks_fully_labeled": len(complete),
                "mean_detailness": sum(r["detailness"] for r in rows) / len(rows) if rows else None,
                "score_agreement": float(quality.exact_match_agreement(score_pairs)) if score_pairs else None,
                "binarized_agreement": float(quality.exact_match_agreement(bin_pairs)) if bin_pairs else None,
            }
        return out

    # -- calibration -----------------------------------------------------

    @app.post("/calibration/run")
    async def run_calibration(request: Request):
        body = await request.json() if await request.body() else {}
        step = body.get("step", 0.005)
        lo = body.get("lo", -0.2)
        hi = body.get("hi", 1.0)
        with state.lock:
            per_clip: dict[str, list[dict]] = {}
            for r in state.label_store.rows:
                per_clip.setdefault(r["clip_id"], []).append(r)
            samples = []
            for clip_id, rows in per_clip.items():
                clip = state.clips.get(clip_id)
                if clip is None or len(rows) < ANNOTATORS_PER_TASK:
                    continue
                mean_score = sum(r["score"] for r in rows) / len(rows)
                label = 1 if mean_score <= 2 else 0
                samples.append((clip["cosine"], label))
        if not samples:
            return _error(400, "no fully labeled clips with similarity scores")
        try:
            report = quality.calibrate(samples, step=step, lo=lo, hi=hi)
        except (ValueError, CapfuseError) as exc:
            return _error(400, str(exc))
        with state.lock:
            state.calibration_report = report.to_dict()
        return state.calibration_report

    @app.get("/calibration/report")
    def calibration_report():
        if state.calibration_report is None:
            return _error(404, "no calibration has been run")
        return state.calibration_report

    # -- static assets ---------------------------------------------------

    @app.get("/audio/{clip_id}")
    def audio(clip_id: str):
        task = next((t for t in state.tasks.values() if t.clip_id == clip_id), None)
        path = Path(task.audio_url) if task and task.audio_url else None
        if path is None or not path.is_file():
            return _error(404, f"no audio on disk for clip {clip_id!r}")
        return FileResponse(path)

    resolved_ui = Path(ui_dir) if ui_dir else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if resolved_ui.is_dir():
        app.mount("/ui", StaticFiles(directory=resolved_ui, html=True), name="ui")

    return app
