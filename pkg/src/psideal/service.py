"""Local HTTP facade over the pipeline for the curation workbench.

One process serves one dataset.  Screening, indicator, and
reconstruction runs execute as asynchronous jobs on a small worker
pool; results are cached by (kind, method, kept set) so interactive
include/exclude toggling never recomputes work it has already done.
All image indices on the wire are 1-based positions in the manifest
order, and every job result repeats the exact kept set and method it
was computed from.
"""

from __future__ import annotations

import io
import itertools
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from tempfile import mkdtemp

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, Response
from PIL import Image

from . import dataio
from .errors import BreakdownError, PsidealError, UnrecoverableBreakdownError
from .integration import heights_from_normals, relative_error_inf
from .linear import align_estimate, estimate_lights_linear
from .nonlinear import estimate_lights_nonlinear
from .screening import (
    METHOD_TAGS,
    DatasetIndicators,
    IdealityReport,
    compare_methods,
    indicators,
    screen_linear,
    screen_nonlinear,
)

THUMBNAIL_MAX_SIDE = 256
ARTIFACT_NAMES = ("report", "normals.png", "albedo.png", "surface.obj", "heights.csv")
JOB_KINDS = ("screen", "reconstruct", "indicators")
WORKER_COUNT = 2

_ARTIFACT_MEDIA = {
    "report": "text/plain",
    "normals.png": "image/png",
    "albedo.png": "image/png",
    "surface.obj": "text/plain",
    "heights.csv": "text/csv",
}

_METHODS_BY_KIND = {
    "screen": METHOD_TAGS + ("all",),
    "reconstruct": ("linear", "nonlinear"),
    "indicators": ("",),
}
_DEFAULT_METHOD = {"screen": "all", "reconstruct": "linear", "indicators": ""}


@dataclass
class Job:
    """One queued/running/finished pipeline run; state moves only forward."""

    id: str
    kind: str
    method: str
    kept: list[int]
    state: str = "queued"
    created: float = field(default_factory=time.time)
    started: float | None = None
    finished: float | None = None
    result: dict | None = None
    error: dict | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "params": {"method": self.method, "kept": list(self.kept)},
            "state": self.state,
            "timing": {
                "created": self.created,
                "started": self.started,
                "finished": self.finished,
            },
            "result": self.result,
            "error": self.error,
        }


def _indicators_json(ind: DatasetIndicators | None) -> dict | None:
    if ind is None:
        return None
    return {
        "fourth_singular_value": float(ind.fourth_singular_value),
        "rank3_gap_ratio": float(ind.rank3_gap_ratio),
        "gram_min_eigenvalue": float(ind.gram_min_eigenvalue),
        "jacobian_rank_gap": float(ind.jacobian_rank_gap),
        "gram_degenerate": bool(ind.gram_degenerate),
        "gn_converged": bool(ind.gn_converged),
        "breakdown": bool(ind.breakdown),
    }


def _report_json(report: IdealityReport, kept_map: list[int]) -> dict:
    """Serialize a report, mapping subset-relative indices to manifest order."""

    def orig(rel: int) -> int:
        return kept_map[rel - 1]

    return {
        "method": report.method,
        "indicators": _indicators_json(report.indicators),
        "trace": [[orig(t), float(s)] for t, s in report.trace],
        "removed": [orig(t) for t in report.removed],
        "restored": None if report.restored is None else orig(report.restored),
        "kept": [orig(t) for t in report.kept],
        "breakdown": bool(report.breakdown),
        "error": report.error,
    }


class CurationService:
    """Owns the dataset, thumbnail cache, job store, and worker pool."""

    def __init__(self, manifest_path, artifacts_dir=None):
        self.manifest_path = Path(manifest_path)
        self.data, self.manifest = dataio.load_dataset(self.manifest_path)
        if artifacts_dir is None:
            artifacts_dir = mkdtemp(prefix="psideal-artifacts-")
        self.artifacts_dir = Path(artifacts_dir)
        self.artifacts_dir.mkdir(parents=True, exist_ok=True)
        self._jobs: dict[str, Job] = {}
        self._cache: dict[tuple, str] = {}
        self._thumbs: dict[int, bytes] = {}
        self._lock = threading.Lock()
        self._ids = itertools.count(1)
        self._pool = ThreadPoolExecutor(max_workers=WORKER_COUNT)

    # ------------------------------------------------------------ dataset

    def dataset_summary(self) -> dict:
        with Image.open(self.manifest.images[0]) as img:
            width_px, height_px = img.size
        spec = self.data.spec
        return {
            "name": self.manifest.name,
            "image_count": self.data.image_count,
            "width": self.manifest.width,
            "image_size": [width_px, height_px],
            "grid": None
            if spec is None
            else {
                "interior_x": spec.interior_x,
                "interior_y": spec.interior_y,
                "spacing": spec.spacing,
            },
            "has_lights": self.manifest.lights_path is not None,
            "has_ground_truth": self.manifest.ground_truth_path is not None,
            "images": [
                {"id": i, "name": path.name, "thumb": f"/thumb/{i}"}
                for i, path in enumerate(self.manifest.images, start=1)
            ],
        }

    def thumbnail(self, index: int) -> bytes:
        if not 1 <= index <= self.data.image_count:
            raise HTTPException(
                404, f"image index {index} outside 1..{self.data.image_count}"
            )
        with self._lock:
            cached = self._thumbs.get(index)
        if cached is not None:
            return cached
        values = dataio.read_grayscale(self.manifest.images[index - 1])
        img = Image.fromarray(np.rint(values * 255.0).astype(np.uint8), mode="L")
        img.thumbnail((THUMBNAIL_MAX_SIDE, THUMBNAIL_MAX_SIDE))
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        data = buf.getvalue()
        with self._lock:
            self._thumbs[index] = data
        return data

    # --------------------------------------------------------------- jobs

    def submit(self, payload) -> tuple[Job, bool]:
        kind, method, kept = self._validate(payload)
        key = (kind, method, tuple(kept))
        with self._lock:
            existing = self._cache.get(key)
            if existing is not None:
                return self._jobs[existing], True
            job = Job(id=str(next(self._ids)), kind=kind, method=method, kept=kept)
            self._jobs[job.id] = job
            self._cache[key] = job.id
        self._pool.submit(self._run, job)
        return job, False

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job id {job_id!r}")
        return job

    def job_json(self, job: Job) -> dict:
        with self._lock:
            return job.to_json()

    def artifact_path(self, job_id: str, name: str) -> Path:
        job = self.get(job_id)
        if name not in ARTIFACT_NAMES:
            raise HTTPException(
                404, f"unknown artifact {name!r}; expected one of {ARTIFACT_NAMES}"
            )
        path = self.artifacts_dir / job.id / name
        if not path.is_file():
            raise HTTPException(404, f"job {job_id} produced no {name!r} artifact")
        return path

    def _validate(self, payload) -> tuple[str, str, list[int]]:
        if not isinstance(payload, dict):
            raise HTTPException(422, "job request body must be a JSON object")
        kind = payload.get("kind")
        if kind not in JOB_KINDS:
            raise HTTPException(
                422, f"unknown job kind {kind!r}; expected one of {JOB_KINDS}"
            )
        q = self.data.image_count
        kept = payload.get("kept", list(range(1, q + 1)))
        ok = isinstance(kept, list) and all(
            isinstance(k, int) and not isinstance(k, bool) for k in kept
        )
        if not ok:
            raise HTTPException(422, "kept must be a list of integers")
        if len(set(kept)) != len(kept):
            raise HTTPException(422, "kept indices must be distinct")
        if any(k < 1 or k > q for k in kept):
            raise HTTPException(422, f"kept indices must lie in 1..{q}")
        if len(kept) < 6:
            raise HTTPException(
                422,
                "estimation needs at least six images, "
                f"got {len(kept)} kept",
            )
        method = payload.get("method", _DEFAULT_METHOD[kind])
        if method not in _METHODS_BY_KIND[kind]:
            allowed = ", ".join(m or "(none)" for m in _METHODS_BY_KIND[kind])
            raise HTTPException(
                422, f"method {method!r} invalid for {kind}; expected: {allowed}"
            )
        return kind, method, sorted(kept)

    def _run(self, job: Job) -> None:
        with self._lock:
            job.state = "running"
            job.started = time.time()
        try:
            result = self._execute(job)
        except UnrecoverableBreakdownError as exc:
            self._fail(job, {"message": str(exc), "best_eigenvalue": exc.best_eigenvalue})
        except BreakdownError as exc:
            self._fail(job, {"message": str(exc), "min_eigenvalue": exc.min_eigenvalue})
        except (PsidealError, FileNotFoundError) as exc:
            self._fail(job, {"message": str(exc)})
        except Exception as exc:  # pragma: no cover - defensive
            self._fail(job, {"message": f"internal error: {exc!r}"})
        else:
            with self._lock:
                job.result = result
                job.state = "done"
                job.finished = time.time()

    def _fail(self, job: Job, error: dict) -> None:
        with self._lock:
            job.error = error
            job.state = "failed"
            job.finished = time.time()

    # ----------------------------------------------------------- pipeline

    def _execute(self, job: Job) -> dict:
        subset = self.data.subset(job.kept)
        job_dir = self.artifacts_dir / job.id
        job_dir.mkdir(parents=True, exist_ok=True)
        base = {"kind": job.kind, "method": job.method, "kept": list(job.kept)}
        if job.kind == "indicators":
            extra = self._run_indicators(subset, job, job_dir)
        elif job.kind == "screen":
            extra = self._run_screen(subset, job, job_dir)
        else:
            extra = self._run_reconstruct(subset, job, job_dir)
        return {**base, **extra}

    def _run_indicators(self, subset, job: Job, job_dir: Path) -> dict:
        ind = indicators(subset)
        lines = [
            "psideal indicator report",
            "kept: " + " ".join(str(k) for k in job.kept),
            dataio.render_indicators(ind, indent=""),
        ]
        (job_dir / "report").write_text("\n".join(lines) + "\n")
        return {
            "indicators": _indicators_json(ind),
            "artifacts": {"report": f"/artifacts/{job.id}/report"},
        }

    def _run_screen(self, subset, job: Job, job_dir: Path) -> dict:
        if job.method == "all":
            reports = compare_methods(subset)
        else:
            reports = [self._screen_one(subset, job.method)]
        text = "\n".join(
            dataio.render_report(r, subset.image_count) for r in reports
        )
        (job_dir / "report").write_text(text)
        return {
            "reports": [_report_json(r, job.kept) for r in reports],
            "artifacts": {"report": f"/artifacts/{job.id}/report"},
        }

    def _screen_one(self, subset, tag: str) -> IdealityReport:
        fast = tag.endswith("-fast")
        run = screen_linear if tag.startswith("algo1") else screen_nonlinear
        try:
            return run(subset, fast=fast)
        except PsidealError as exc:
            try:
                ind = indicators(subset)
            except PsidealError:
                ind = None
            return IdealityReport(
                method=tag,
                indicators=ind,
                kept=list(range(1, subset.image_count + 1)),
                breakdown=isinstance(exc, UnrecoverableBreakdownError)
                or (ind.breakdown if ind else False),
                error=str(exc),
            )

    def _run_reconstruct(self, subset, job: Job, job_dir: Path) -> dict:
        spec = self.data.spec
        if spec is None:
            raise PsidealError("images are too small to carry a reconstruction grid")
        if job.method == "nonlinear":
            estimate = estimate_lights_nonlinear(subset)
            stats = {
                "gn_converged": bool(estimate.result.converged),
                "gn_iterations": int(estimate.result.iterations),
            }
        else:
            estimate = estimate_lights_linear(subset)
            stats = {"gram_min_eigenvalue": float(estimate.gram.min_eigenvalue)}
        lights = self.manifest.lights()
        reference = None if lights is None else lights.subset(job.kept)
        aligned = align_estimate(estimate, reference)
        surface = heights_from_normals(aligned.field, spec)

        dataio.save_surface_obj(job_dir / "surface.obj", surface)
        dataio.save_heights_csv(job_dir / "heights.csv", surface)
        dataio.export_normal_map(
            job_dir / "normals.png", job_dir / "albedo.png", aligned.field, spec
        )
        lines = [
            "psideal reconstruction report",
            f"method: {job.method}",
            "kept: " + " ".join(str(k) for k in job.kept),
            f"aligned: {dataio.yesno(reference is not None)}",
        ]
        for name, value in stats.items():
            shown = dataio.yesno(value) if isinstance(value, bool) else dataio.fmt(value)
            lines.append(f"{name}: {shown}")
        result = dict(stats)
        truth = self.manifest.ground_truth()
        if truth is not None:
            error = float(relative_error_inf(surface, truth))
            result["relative_error_inf"] = error
            lines.append(f"relative_error_inf: {dataio.fmt(error)}")
        (job_dir / "report").write_text("\n".join(lines) + "\n")
        result["artifacts"] = {
            name: f"/artifacts/{job.id}/{name}" for name in ARTIFACT_NAMES
        }
        return result


def create_app(manifest_path, artifacts_dir=None) -> FastAPI:
    """Build the FastAPI app for one dataset manifest.

    Raises ManifestError immediately (before serving) when the manifest
    is empty or unreadable.
    """
    service = CurationService(manifest_path, artifacts_dir)
    app = FastAPI(title="psideal curation service")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/dataset")
    def get_dataset() -> dict:
        return service.dataset_summary()

    @app.get("/thumb/{index}")
    def get_thumb(index: int) -> Response:
        return Response(content=service.thumbnail(index), media_type="image/png")

    @app.post("/jobs")
    def post_job(payload: dict) -> dict:
        job, cached = service.submit(payload)
        body = service.job_json(job)
        body["cached"] = cached
        return body

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        return service.job_json(service.get(job_id))

    @app.get("/artifacts/{job_id}/{name}")
    def get_artifact(job_id: str, name: str) -> FileResponse:
        path = service.artifact_path(job_id, name)
        return FileResponse(path, media_type=_ARTIFACT_MEDIA[name])

    return app
