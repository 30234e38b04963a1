"""HTTP API over datasets, models, and inverse searches.

Single-process FastAPI app, loopback-oriented. Uploads are raw CSV/TSV
bodies (capped at 200 MB) fingerprinted by content hash, long work
(training, inverse search) runs on a small thread pool as jobs with
monotone queued -> running -> done/failed states, and all errors carry a
machine-readable code alongside the human message.
"""

from __future__ import annotations

import hashlib
import io
import itertools
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from . import __version__
from .bundle import ModelBundle, bundle_from_bytes, bundle_to_bytes
from .chemistry import StrictnessPolicy, bundled_feasibility
from .dataset import IngestError, describe, load_dataset, summaries_to_delimited
from .evaluation import report_to_json, run_benchmark, select_best
from .imc import ImcConfig, run_imc, summary_to_json
from .interpret import (
    InterpretError,
    permutation_importance,
    residual_diagnostics,
    response_grid,
)
from .learners import LEARNER_KINDS
from .pipeline import RecipeConfig
from .sampling import (
    SAMPLING_METHODS,
    balanced_sobol_doptimal,
    sample_random,
    sobol_doptimal_sample,
)

MAX_UPLOAD_BYTES = 200 * 1024 * 1024
ALLOWED_K = (3, 5, 10)

_JOB_TRANSITIONS = {
    "queued": {"running", "failed"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


# -------------------------------------------------------------- storage


@dataclass
class DatasetEntry:
    id: str
    name: str
    fingerprint: str
    ds: object
    report: dict


@dataclass
class ModelEntry:
    id: str
    dataset_id: str
    bundle: ModelBundle
    eval_report: dict
    diagnostics: dict
    test_positions: np.ndarray


@dataclass
class Job:
    id: str
    kind: str
    status: str = "queued"
    progress: float = 0.0
    message: str = ""
    error: dict | None = None
    result: dict | None = None
    created: float = field(default_factory=time.time)
    started: float | None = None
    finished: float | None = None


class Store:
    def __init__(self, data_dir: str | None):
        self.lock = threading.Lock()
        self.datasets: dict[str, DatasetEntry] = {}
        self.models: dict[str, ModelEntry] = {}
        self.jobs: dict[str, Job] = {}
        self.exports: dict[str, tuple[str, str, str]] = {}  # id -> (filename, media, text)
        self.tables = bundled_feasibility()
        self._counter = itertools.count(1)
        self.data_dir = Path(data_dir) if data_dir else None
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)

    def next_id(self, prefix: str) -> str:
        with self.lock:
            return f"{prefix}{next(self._counter)}"

    def set_job(self, job: Job, status: str, **updates) -> None:
        with self.lock:
            if status != job.status and status not in _JOB_TRANSITIONS[job.status]:
                raise RuntimeError(f"illegal job transition {job.status} -> {status}")
            job.status = status
            for key, value in updates.items():
                setattr(job, key, value)

    def add_export(self, filename: str, media: str, text: str) -> str:
        export_id = self.next_id("x")
        with self.lock:
            self.exports[export_id] = (filename, media, text)
        return export_id

    def get_dataset(self, dataset_id: str) -> DatasetEntry:
        entry = self.datasets.get(dataset_id)
        if entry is None:
            raise _error(404, "dataset_not_found", f"no dataset {dataset_id!r}")
        return entry

    def get_model(self, model_id: str) -> ModelEntry:
        entry = self.models.get(model_id)
        if entry is None:
            raise _error(404, "model_not_found", f"no model {model_id!r}")
        return entry

    def get_job(self, job_id: str) -> Job:
        job = self.jobs.get(job_id)
        if job is None:
            raise _error(404, "job_not_found", f"no job {job_id!r}")
        return job


# -------------------------------------------------------------- schemas


class SampleRequest(BaseModel):
    method: str = "random"
    n: int = Field(gt=0)
    seed: int = 0
    oversample_factor: float = Field(default=2.62, ge=1.0)

    @field_validator("method")
    @classmethod
    def _method_known(cls, value):
        if value not in SAMPLING_METHODS:
            raise ValueError(f"method must be one of {SAMPLING_METHODS}")
        return value


class TrainRequest(BaseModel):
    dataset_id: str
    method: str = "random"
    learners: list[str] = Field(default_factory=lambda: ["linear", "knn", "random_forest"])
    n_train: int | None = Field(default=None, gt=0)
    test_fraction: float = 0.30
    k: int = 5
    seed: int = 0
    pca_components: int | None = Field(default=None, ge=1)

    @field_validator("method")
    @classmethod
    def _method_known(cls, value):
        if value not in SAMPLING_METHODS:
            raise ValueError(f"method must be one of {SAMPLING_METHODS}")
        return value

    @field_validator("learners")
    @classmethod
    def _learners_known(cls, value):
        unknown = [kind for kind in value if kind not in LEARNER_KINDS]
        if unknown or not value:
            raise ValueError(f"learners must be a non-empty subset of {LEARNER_KINDS}")
        return value

    @field_validator("k")
    @classmethod
    def _k_allowed(cls, value):
        if value not in ALLOWED_K:
            raise ValueError(f"k must be one of {ALLOWED_K}")
        return value

    @field_validator("test_fraction")
    @classmethod
    def _fraction_range(cls, value):
        if not 0.10 <= value <= 0.40:
            raise ValueError("test_fraction must be in [0.10, 0.40]")
        return value


class SurfaceRequest(BaseModel):
    var_a: str
    var_b: str
    resolution: int = Field(default=25, ge=2, le=100)


class ImcRequest(BaseModel):
    mode: str
    polymer: str
    target: float = Field(gt=0)
    tolerance: float = Field(ge=0)
    n_simulations: int = Field(default=10000, ge=1, le=200000)
    strictness: str = "balanced"
    no_allow_pct: float = Field(default=0.0, ge=0.0, le=100.0)
    seed: int = 0
    top_k: int = Field(default=20, ge=1, le=100)
    dataset_id: str | None = None

    @field_validator("mode")
    @classmethod
    def _mode_known(cls, value):
        if value not in ("experimental", "optimization"):
            raise ValueError("mode must be 'experimental' or 'optimization'")
        return value

    @field_validator("strictness")
    @classmethod
    def _strictness_known(cls, value):
        if value not in ("strict", "balanced", "lax"):
            raise ValueError("strictness must be strict, balanced, or lax")
        return value


# ------------------------------------------------------------------ app


def _downsample(values: np.ndarray, cap: int = 1000) -> list[float]:
    if len(values) <= cap:
        return [float(v) for v in values]
    idx = np.linspace(0, len(values) - 1, cap).astype(int)
    return [float(v) for v in values[idx]]


def _diagnostics_payload(y: np.ndarray, predictions: np.ndarray) -> dict:
    diag = residual_diagnostics(y, predictions)
    return {
        "flags": diag.flags,
        "slope": diag.slope,
        "variance_ratio": diag.variance_ratio,
        "tail_deviation_ses": diag.tail_deviation_ses,
        "observed": _downsample(diag.observed),
        "predicted": _downsample(diag.predicted),
        "residuals": _downsample(diag.residuals),
        "qq_theoretical": _downsample(diag.qq_theoretical),
        "qq_sample": _downsample(diag.qq_sample),
    }


def _run_train_job(store: Store, job: Job, request: TrainRequest) -> None:
    try:
        store.set_job(job, "running", started=time.time(), message="selecting rows")
        entry = store.datasets[request.dataset_id]
        result = run_benchmark(
            entry.ds,
            methods=[request.method],
            learner_kinds=request.learners,
            n_train=request.n_train,
            test_fraction=request.test_fraction,
            k=request.k,
            seed=request.seed,
            recipe_config=RecipeConfig(pca_components=request.pca_components),
        )
        store.set_job(job, "running", progress=0.8, message="scoring winner")
        report = result.report
        best_idx = select_best(report)
        best = report.rows[best_idx]
        artifact = result.artifacts[(best.method, best.learner)]
        metadata = {
            "tool": f"spindesign {__version__}",
            "dataset_fingerprint": entry.fingerprint,
            "dataset_id": entry.id,
            "config": json.loads(request.model_dump_json()),
            "winner": {"learner": best.learner, "params": best.params, "method": best.method},
            "eval_report": report_to_json(report),
        }
        bundle = ModelBundle(recipe=artifact.recipe, learner=artifact.learner, metadata=metadata)
        diagnostics = _diagnostics_payload(
            result.y_test, result.test_predictions[(best.method, best.learner)]
        )
        model_id = store.next_id("m")
        entry_model = ModelEntry(
            id=model_id,
            dataset_id=entry.id,
            bundle=bundle,
            eval_report=metadata["eval_report"],
            diagnostics=diagnostics,
            test_positions=result.test_positions,
        )
        with store.lock:
            store.models[model_id] = entry_model
        if store.data_dir:
            models_dir = store.data_dir / "models"
            models_dir.mkdir(exist_ok=True)
            (models_dir / f"{model_id}.bundle").write_bytes(bundle_to_bytes(bundle))
        store.set_job(
            job,
            "done",
            progress=1.0,
            finished=time.time(),
            message="complete",
            result={
                "model_id": model_id,
                "winner": metadata["winner"],
                "report": metadata["eval_report"],
            },
        )
    except Exception as exc:  # noqa: BLE001 - job boundary
        store.set_job(
            job,
            "failed",
            finished=time.time(),
            error={"code": "train_failed", "message": str(exc)},
        )


def _run_imc_job(store: Store, job: Job, model: ModelEntry, request: ImcRequest) -> None:
    try:
        store.set_job(job, "running", started=time.time(), message="simulating")
        dataset_id = request.dataset_id or model.dataset_id
        entry = store.datasets.get(dataset_id)
        if entry is None:
            raise ValueError(f"dataset {dataset_id!r} is not loaded")
        config = ImcConfig(
            mode=request.mode,
            polymer=request.polymer,
            target=request.target,
            tolerance=request.tolerance,
            n_simulations=request.n_simulations,
            policy=StrictnessPolicy(request.strictness, no_allow_pct=request.no_allow_pct),
            seed=request.seed,
            top_k=request.top_k,
        )
        run = run_imc(config, model.bundle, entry.ds, store.tables)
        buffer = io.StringIO()
        run.draws.to_csv(buffer, index=False)
        export_id = store.add_export(
            f"imc_{model.id}_draws.csv", "text/csv", buffer.getvalue()
        )
        payload = json.loads(summary_to_json(run.summary, run.top))
        payload["draws_export"] = export_id
        payload["model_id"] = model.id
        store.set_job(
            job, "done", progress=1.0, finished=time.time(), message="complete", result=payload
        )
    except Exception as exc:  # noqa: BLE001 - job boundary
        store.set_job(
            job,
            "failed",
            finished=time.time(),
            error={"code": "imc_failed", "message": str(exc)},
        )


def create_app(data_dir: str | None = None, ui_dir: str | None = None) -> FastAPI:
    @asynccontextmanager
    async def _lifespan(running: FastAPI):
        yield
        running.state.executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="spindesign", version=__version__, lifespan=_lifespan)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = Store(data_dir)
    app.state.store = store
    app.state.executor = ThreadPoolExecutor(max_workers=2)

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "detail": {
                    "code": "validation_error",
                    "message": "request failed validation",
                    "errors": jsonable_encoder(exc.errors(), exclude={"input", "ctx"}),
                }
            },
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    # ------------------------------------------------------- datasets

    @app.post("/datasets", status_code=201)
    async def upload_dataset(request: Request, name: str | None = Query(default=None)):
        body = await request.body()
        if len(body) > MAX_UPLOAD_BYTES:
            raise _error(413, "too_large", "upload exceeds the 200 MB limit")
        if not body:
            raise _error(422, "empty_upload", "request body is empty")
        fingerprint = hashlib.sha256(body).hexdigest()
        dataset_id = f"d{fingerprint[:12]}"
        if dataset_id in store.datasets:
            entry = store.datasets[dataset_id]
            return {
                "dataset_id": entry.id,
                "fingerprint": entry.fingerprint,
                "reused": True,
                "report": entry.report,
            }
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError:
            raise _error(422, "bad_encoding", "upload must be UTF-8 text")
        try:
            ds = load_dataset(io.StringIO(text))
        except IngestError as exc:
            raise _error(422, "ingest_error", str(exc))
        report = ds.report
        report_dict = {
            "rows_in": report.rows_in,
            "rows_out": report.rows_out,
            "drops": dict(report.drops),
            "ratio_defaulted": report.ratio_defaulted,
            "header_renames": report.header_renames,
            "solvent_renames": report.solvent_renames,
        }
        entry = DatasetEntry(
            id=dataset_id,
            name=name or dataset_id,
            fingerprint=fingerprint,
            ds=ds,
            report=report_dict,
        )
        with store.lock:
            store.datasets[dataset_id] = entry
        if store.data_dir:
            uploads = store.data_dir / "datasets"
            uploads.mkdir(exist_ok=True)
            (uploads / f"{dataset_id}.csv").write_bytes(body)
        return {
            "dataset_id": dataset_id,
            "fingerprint": fingerprint,
            "reused": False,
            "report": report_dict,
        }

    @app.get("/datasets")
    def list_datasets():
        return [
            {
                "dataset_id": e.id,
                "name": e.name,
                "rows": int(len(e.ds.frame)),
                "polymers": len(e.ds.polymers()),
                "fingerprint": e.fingerprint,
            }
            for e in store.datasets.values()
        ]

    @app.get("/datasets/{dataset_id}")
    def dataset_detail(dataset_id: str):
        entry = store.get_dataset(dataset_id)
        return {
            "dataset_id": entry.id,
            "name": entry.name,
            "fingerprint": entry.fingerprint,
            "rows": int(len(entry.ds.frame)),
            "report": entry.report,
        }

    @app.get("/datasets/{dataset_id}/summary")
    def dataset_summary(dataset_id: str, format: str = Query(default="json")):
        entry = store.get_dataset(dataset_id)
        summaries = describe(entry.ds)
        if format == "csv":
            return Response(
                content=summaries_to_delimited(summaries),
                media_type="text/csv",
            )
        return [
            {
                "polymer": s.polymer,
                "n": s.n,
                "mean": s.mean,
                "std_dev": s.std_dev,
                "q1": s.q1,
                "median": s.median,
                "q3": s.q3,
                "skewness": s.skewness if s.shape_defined else None,
                "excess_kurtosis": s.excess_kurtosis if s.shape_defined else None,
            }
            for s in summaries
        ]

    @app.get("/datasets/{dataset_id}/polymers")
    def dataset_polymers(dataset_id: str):
        entry = store.get_dataset(dataset_id)
        counts = entry.ds.polymer_counts()
        return [{"name": name, "rows": int(counts[name])} for name in sorted(counts)]

    @app.post("/datasets/{dataset_id}/sample")
    def dataset_sample(dataset_id: str, request: SampleRequest):
        entry = store.get_dataset(dataset_id)
        try:
            if request.method == "random":
                rows = sample_random(entry.ds, request.n, seed=request.seed)
                frame = entry.ds.frame.iloc[rows]
                detail = {"selected": int(len(rows))}
            elif request.method == "sobol_doptimal":
                design = sobol_doptimal_sample(
                    entry.ds,
                    request.n,
                    oversample_factor=request.oversample_factor,
                    seed=request.seed,
                )
                frame = design.frame
                detail = {
                    "selected": int(len(design.frame)),
                    "generated": design.generated,
                    "discarded_infeasible": design.discarded_infeasible,
                    "criterion": design.selection.criterion if design.selection else None,
                    "notes": design.notes,
                }
            else:
                design = balanced_sobol_doptimal(
                    entry.ds,
                    request.n,
                    oversample_factor=request.oversample_factor,
                    seed=request.seed,
                )
                frame = design.frame
                detail = {
                    "selected": int(len(design.frame)),
                    "allocations": design.allocation.allocations,
                    "capped": design.allocation.capped,
                    "notes": design.notes,
                }
        except ValueError as exc:
            raise _error(422, "sampling_error", str(exc))
        buffer = io.StringIO()
        frame.to_csv(buffer, index=False)
        export_id = store.add_export(
            f"plan_{dataset_id}_{request.method}.csv", "text/csv", buffer.getvalue()
        )
        return {"method": request.method, "plan_export": export_id, **detail}

    # ------------------------------------------------------ feasibility

    @app.get("/feasibility")
    def feasibility_status():
        tables = store.tables
        return {
            "ratings": tables.solubility.rating_counts(),
            "pairs": len(tables.solubility),
            "incompatible_pairs": len(tables.incompatibility),
            "incompatibility_fallback": tables.incompatibility.fallback,
            "warnings": tables.warnings,
            "strictness_thresholds": dict(StrictnessPolicy.THRESHOLDS),
        }

    # ----------------------------------------------------------- train

    @app.post("/train", status_code=202)
    def start_train(request: TrainRequest):
        store.get_dataset(request.dataset_id)
        job = Job(id=store.next_id("j"), kind="train")
        with store.lock:
            store.jobs[job.id] = job
        app.state.executor.submit(_run_train_job, store, job, request)
        return {"job_id": job.id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = store.get_job(job_id)
        return {
            "job_id": job.id,
            "kind": job.kind,
            "status": job.status,
            "progress": job.progress,
            "message": job.message,
            "error": job.error,
            "result": job.result,
            "created": job.created,
            "started": job.started,
            "finished": job.finished,
        }

    # ---------------------------------------------------------- models

    @app.get("/models")
    def list_models():
        return [
            {
                "model_id": e.id,
                "dataset_id": e.dataset_id,
                "winner": e.bundle.metadata.get("winner"),
            }
            for e in store.models.values()
        ]

    @app.get("/models/{model_id}")
    def model_detail(model_id: str):
        entry = store.get_model(model_id)
        meta = dict(entry.bundle.metadata)
        meta.pop("eval_report", None)
        return {"model_id": entry.id, "dataset_id": entry.dataset_id, "metadata": meta}

    @app.get("/models/{model_id}/metrics")
    def model_metrics(model_id: str):
        entry = store.get_model(model_id)
        return entry.eval_report

    @app.get("/models/{model_id}/diagnostics")
    def model_diagnostics(model_id: str):
        entry = store.get_model(model_id)
        return entry.diagnostics

    @app.get("/models/{model_id}/importance")
    def model_importance(
        model_id: str,
        repeats: int = Query(default=5, ge=1, le=50),
        seed: int = Query(default=0),
    ):
        entry = store.get_model(model_id)
        dataset = store.get_dataset(entry.dataset_id)
        rows = dataset.ds.frame.iloc[entry.test_positions]
        report = permutation_importance(entry.bundle, rows, repeats=repeats, seed=seed)
        return {
            "baseline_rmse": report.baseline_rmse,
            "repeats": report.repeats,
            "seed": report.seed,
            "features": [
                {
                    "feature": f.feature,
                    "score": f.score,
                    "raw_mean": f.raw_mean,
                    "std_error": f.std_error,
                    "rank": f.rank,
                }
                for f in report.features
            ],
        }

    @app.post("/models/{model_id}/surface")
    def model_surface(model_id: str, request: SurfaceRequest):
        entry = store.get_model(model_id)
        dataset = store.get_dataset(entry.dataset_id)
        try:
            grid = response_grid(
                entry.bundle,
                dataset.ds.frame,
                request.var_a,
                request.var_b,
                resolution=request.resolution,
            )
        except InterpretError as exc:
            raise _error(422, "surface_error", str(exc))
        return {
            "var_a": grid.var_a,
            "var_b": grid.var_b,
            "grid_a": [float(v) for v in grid.grid_a],
            "grid_b": [float(v) for v in grid.grid_b],
            "matrix": [[float(v) for v in row] for row in grid.matrix],
            "fixed": grid.fixed,
        }

    @app.post("/models/{model_id}/imc", status_code=202)
    def start_imc(model_id: str, request: ImcRequest):
        entry = store.get_model(model_id)
        if request.dataset_id is not None:
            store.get_dataset(request.dataset_id)
        elif entry.dataset_id not in store.datasets:
            raise _error(
                422,
                "dataset_not_loaded",
                "the model's training dataset is gone; pass dataset_id",
            )
        job = Job(id=store.next_id("j"), kind="imc")
        with store.lock:
            store.jobs[job.id] = job
        app.state.executor.submit(_run_imc_job, store, job, entry, request)
        return {"job_id": job.id}

    @app.get("/models/{model_id}/bundle")
    def download_bundle(model_id: str):
        entry = store.get_model(model_id)
        return Response(
            content=bundle_to_bytes(entry.bundle),
            media_type="application/octet-stream",
            headers={"Content-Disposition": f"attachment; filename={model_id}.bundle"},
        )

    @app.post("/models/load", status_code=201)
    async def load_model(request: Request, dataset_id: str = Query(...)):
        dataset = store.get_dataset(dataset_id)
        body = await request.body()
        if len(body) > MAX_UPLOAD_BYTES:
            raise _error(413, "too_large", "upload exceeds the 200 MB limit")
        try:
            bundle = bundle_from_bytes(body)
        except ValueError as exc:
            raise _error(422, "bad_bundle", str(exc))
        model_id = store.next_id("m")
        rows = dataset.ds.frame
        positions = bundle.metadata.get("test_positions")
        if positions and max(positions) < len(rows):
            test_positions = np.asarray(positions, dtype=int)
        else:
            test_positions = np.arange(len(rows))
        try:
            predictions = bundle.predict_rows(rows.iloc[test_positions])
        except ValueError as exc:
            raise _error(422, "incompatible_model", str(exc))
        y = rows.iloc[test_positions]["fiber_diameter"].to_numpy(dtype=float)
        entry = ModelEntry(
            id=model_id,
            dataset_id=dataset_id,
            bundle=bundle,
            eval_report=bundle.metadata.get("eval_report", {"rows": []}),
            diagnostics=_diagnostics_payload(y, predictions),
            test_positions=test_positions,
        )
        with store.lock:
            store.models[model_id] = entry
        return {"model_id": model_id, "dataset_id": dataset_id}

    # ---------------------------------------------------------- exports

    @app.get("/exports/{export_id}")
    def get_export(export_id: str):
        item = store.exports.get(export_id)
        if item is None:
            raise _error(404, "export_not_found", f"no export {export_id!r}")
        filename, media, text = item
        return Response(
            content=text,
            media_type=media,
            headers={"Content-Disposition": f"attachment; filename={filename}"},
        )

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
