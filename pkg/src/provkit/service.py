"""Analysis service: configuration, job store, engine and HTTP API.

A single process owns one data directory (corpus, index, jobs, reports,
score log) and runs analyses from an embedded queue, one at a time by
default. The HTTP surface:

    POST /api/analyses                multipart image upload (+ k, m)
    GET  /api/analyses/{job_id}       job state snapshot
    GET  /api/analyses/{job_id}/report
    GET  /api/corpus/images/{image_id}
    POST /api/scores
    GET  /api/eval/distribution?question=Q1|Q2

plus static file serving for the review UI bundle when configured.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .corpus import CorpusStore
from .embedding import EmbedderProvider, RemoteEmbedder, StubEmbedder
from .errors import (
    PipelineError,
    ProvkitError,
    ReportNotReadyError,
    UnknownJobError,
)
from .inference import run_analysis
from .retrieval import Retriever, VectorIndex, build_index
from .evaluation import ScoreLog
from .vlm import MockVlmClient, RemoteVlmClient, Transcript, VlmClient

JOB_STATES = ("queued", "retrieving", "interpreting", "synthesizing", "done", "failed")
_STATE_RANK = {state: i for i, state in enumerate(JOB_STATES)}
_TERMINAL = {"done", "failed"}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class ServiceConfig:
    root: Path
    corpus_dir: Path
    index_path: Path
    scores_path: Path
    jobs_dir: Path
    reports_dir: Path
    uploads_dir: Path
    static_dir: Path | None
    embedder_conf: dict
    semantic_conf: dict
    vlm_conf: dict
    k: int = 5
    m: int = 10
    sigma: float = 1.0
    side: int = 224
    host: str = "127.0.0.1"
    port: int = 8823
    max_upload_bytes: int = 10 * 1024 * 1024
    phase1_workers: int = 4
    job_workers: int = 1

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ValueError(f"k and m must be >= 1 (k={self.k}, m={self.m})")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        root = path.parent.resolve()

        def resolve(value: str) -> Path:
            p = Path(value)
            return p if p.is_absolute() else root / p

        data_dir = resolve(raw.get("data_dir", "data"))
        defaults = raw.get("defaults", {})
        listen = raw.get("listen", {})
        limits = raw.get("limits", {})
        embedder = raw.get("embedder", {"kind": "stub"})
        return cls(
            root=root,
            corpus_dir=resolve(raw["corpus_dir"]) if "corpus_dir" in raw else data_dir / "corpus",
            index_path=resolve(raw["index_path"]) if "index_path" in raw else data_dir / "index.bin",
            scores_path=resolve(raw["scores_path"]) if "scores_path" in raw else data_dir / "scores.jsonl",
            jobs_dir=data_dir / "jobs",
            reports_dir=data_dir / "reports",
            uploads_dir=data_dir / "uploads",
            static_dir=resolve(raw["static_dir"]) if raw.get("static_dir") else None,
            embedder_conf=embedder,
            semantic_conf=raw.get("semantic_embedder", embedder),
            vlm_conf=raw.get("vlm", {"kind": "remote"}),
            k=int(defaults.get("k", 5)),
            m=int(defaults.get("m", 10)),
            sigma=float(defaults.get("sigma", 1.0)),
            side=int(defaults.get("side", 224)),
            host=listen.get("host", "127.0.0.1"),
            port=int(listen.get("port", 8823)),
            max_upload_bytes=int(limits.get("max_upload_bytes", 10 * 1024 * 1024)),
            phase1_workers=int(limits.get("phase1_workers", 4)),
            job_workers=int(limits.get("job_workers", 1)),
        )

    def make_embedder(self, conf: dict | None = None) -> EmbedderProvider:
        conf = conf if conf is not None else self.embedder_conf
        kind = conf.get("kind", "stub")
        if kind == "stub":
            return StubEmbedder()
        if kind == "remote":
            # EMBED_API_BASE (read inside RemoteEmbedder) overrides a missing endpoint.
            return RemoteEmbedder(
                endpoint=conf.get("endpoint"),
                embedder_id=conf.get("embedder_id"),
                dim=conf.get("dim"),
            )
        raise ValueError(f"unknown embedder kind {kind!r}")

    def make_semantic_embedder(self) -> EmbedderProvider:
        return self.make_embedder(self.semantic_conf)

    def make_vlm(self) -> VlmClient:
        kind = self.vlm_conf.get("kind", "remote")
        if kind == "mock":
            responses = self.vlm_conf.get("responses")
            if not responses:
                raise ValueError("mock vlm requires a 'responses' fixture path")
            p = Path(responses)
            return MockVlmClient.from_file(p if p.is_absolute() else self.root / p)
        if kind == "remote":
            return RemoteVlmClient(
                endpoint=self.vlm_conf.get("endpoint"),
                model=self.vlm_conf.get("model", "gpt-4o"),
            )
        raise ValueError(f"unknown vlm kind {kind!r}")


@dataclass
class AnalysisJob:
    job_id: str
    state: str
    created_at: str
    updated_at: str
    params: dict
    media_type: str
    error: dict | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "params": self.params,
            "media_type": self.media_type,
            "error": self.error,
        }


class JobStore:
    """File-backed job records with forward-only state transitions."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, job_id: str) -> Path:
        return self.dir / f"{job_id}.json"

    def _write(self, job: AnalysisJob) -> None:
        # atomic replace: concurrent readers never see a torn record
        path = self._path(job.job_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(job.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        os.replace(tmp, path)

    def create(self, params: dict, media_type: str) -> AnalysisJob:
        job = AnalysisJob(
            job_id=uuid.uuid4().hex,
            state="queued",
            created_at=_now(),
            updated_at=_now(),
            params=params,
            media_type=media_type,
        )
        with self._lock:
            self._write(job)
        return job

    def get(self, job_id: str) -> AnalysisJob:
        path = self._path(job_id)
        if not path.exists():
            raise UnknownJobError(f"unknown job {job_id!r}")
        raw = json.loads(path.read_text(encoding="utf-8"))
        return AnalysisJob(**raw)

    def exists(self, job_id: str) -> bool:
        return self._path(job_id).exists()

    def advance(self, job_id: str, state: str) -> AnalysisJob:
        if state not in _STATE_RANK:
            raise ValueError(f"unknown state {state!r}")
        with self._lock:
            job = self.get(job_id)
            if job.state in _TERMINAL:
                raise ValueError(f"job {job_id} already terminal ({job.state})")
            if _STATE_RANK[state] <= _STATE_RANK[job.state]:
                raise ValueError(f"cannot move job {job_id} from {job.state} back to {state}")
            job.state = state
            job.updated_at = _now()
            self._write(job)
            return job

    def fail(self, job_id: str, stage: str, message: str) -> AnalysisJob:
        with self._lock:
            job = self.get(job_id)
            if job.state in _TERMINAL:
                raise ValueError(f"job {job_id} already terminal ({job.state})")
            job.state = "failed"
            job.error = {"stage": stage, "message": message}
            job.updated_at = _now()
            self._write(job)
            return job


class AnalysisEngine:
    """Owns the pipeline pieces and the background job queue."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = CorpusStore(config.corpus_dir)
        self.index = VectorIndex.load(config.index_path)
        self.provider_raw = config.make_embedder()
        self.provider_semantic = config.make_semantic_embedder()
        self.retriever = Retriever(
            self.index, self.provider_raw, self.provider_semantic, side=config.side
        )
        self.client = config.make_vlm()
        self.jobs = JobStore(config.jobs_dir)
        self.scores = ScoreLog(config.scores_path, object_exists=self.jobs.exists)
        config.reports_dir.mkdir(parents=True, exist_ok=True)
        config.uploads_dir.mkdir(parents=True, exist_ok=True)
        self._queue: queue.Queue[str | None] = queue.Queue()
        self._threads: list[threading.Thread] = []
        self._started = False

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        for i in range(max(1, self.config.job_workers)):
            t = threading.Thread(target=self._worker, name=f"analysis-worker-{i}", daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self) -> None:
        if not self._started:
            return
        for _ in self._threads:
            self._queue.put(None)
        for t in self._threads:
            t.join(timeout=10)
        self._threads.clear()
        self._started = False

    # -- job intake ------------------------------------------------------

    def submit_analysis(
        self, data: bytes, media_type: str, k: int | None = None, m: int | None = None
    ) -> AnalysisJob:
        k = self.config.k if k is None else k
        m = self.config.m if m is None else m
        if k < 1 or m < 1:
            raise ValueError(f"k and m must be >= 1 (k={k}, m={m})")
        if len(data) > self.config.max_upload_bytes:
            raise ValueError(
                f"payload of {len(data)} bytes exceeds cap of {self.config.max_upload_bytes}"
            )
        job = self.jobs.create(
            params={"k": k, "m": m, "sigma": self.index.sigma}, media_type=media_type
        )
        (self.config.uploads_dir / f"{job.job_id}.bin").write_bytes(data)
        self._queue.put(job.job_id)
        return job

    def report_path(self, job_id: str) -> Path:
        return self.config.reports_dir / f"{job_id}.json"

    def report_bytes(self, job_id: str) -> bytes:
        job = self.jobs.get(job_id)
        if job.state != "done":
            diagnostic = None
            if job.error:
                diagnostic = f"failed at {job.error['stage']}: {job.error['message']}"
            raise ReportNotReadyError(job_id, job.state, diagnostic)
        return self.report_path(job_id).read_bytes()

    # -- processing ------------------------------------------------------

    def _worker(self) -> None:
        while True:
            job_id = self._queue.get()
            if job_id is None:
                return
            try:
                self._process(job_id)
            except Exception:
                # _process reports failures into the job record; an escape
                # here means the record itself was unwritable.
                pass
            finally:
                self._queue.task_done()

    def _process(self, job_id: str) -> None:
        job = self.jobs.get(job_id)
        data = (self.config.uploads_dir / f"{job_id}.bin").read_bytes()
        transcript = Transcript()

        def on_stage(stage: str) -> None:
            self.jobs.advance(job_id, stage)

        try:
            report = run_analysis(
                data,
                store=self.store,
                retriever=self.retriever,
                client=self.client,
                k=job.params["k"],
                m=job.params["m"],
                phase1_workers=self.config.phase1_workers,
                on_stage=on_stage,
                transcript=transcript,
            )
        except PipelineError as exc:
            self.jobs.fail(job_id, exc.stage, exc.message)
            return
        except Exception as exc:
            self.jobs.fail(job_id, "internal", str(exc))
            return
        finally:
            audit = self.config.jobs_dir / f"{job_id}.transcript.json"
            audit.write_text(
                json.dumps(transcript.to_records(), sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
            )
        self.report_path(job_id).write_bytes(report.to_json_bytes())
        self.jobs.advance(job_id, "done")


def index_corpus(config: ServiceConfig) -> VectorIndex:
    """Build and persist the index for the configured corpus."""
    store = CorpusStore(config.corpus_dir)
    index = build_index(
        store,
        config.make_embedder(),
        config.make_semantic_embedder(),
        sigma=config.sigma,
        side=config.side,
    )
    config.index_path.parent.mkdir(parents=True, exist_ok=True)
    index.save(config.index_path)
    return index


def create_app(engine: AnalysisEngine) -> FastAPI:
    """FastAPI application over an engine; starts the worker threads."""
    app = FastAPI(title="provkit", version="0.1.0")
    engine.start()

    @app.post("/api/analyses", status_code=202)
    async def submit(
        file: UploadFile = File(...),
        k: int | None = Form(None),
        m: int | None = Form(None),
    ):
        if not (file.content_type or "").startswith("image/"):
            raise HTTPException(415, detail=f"unsupported media type {file.content_type!r}")
        data = await file.read()
        if len(data) > engine.config.max_upload_bytes:
            raise HTTPException(
                413,
                detail=f"payload of {len(data)} bytes exceeds cap of "
                f"{engine.config.max_upload_bytes}",
            )
        try:
            job = engine.submit_analysis(data, file.content_type, k=k, m=m)
        except ValueError as exc:
            raise HTTPException(422, detail=str(exc))
        return {"job_id": job.job_id, "state": job.state}

    @app.get("/api/analyses/{job_id}")
    def get_job(job_id: str):
        try:
            return engine.jobs.get(job_id).to_dict()
        except UnknownJobError as exc:
            raise HTTPException(404, detail=str(exc))

    @app.get("/api/analyses/{job_id}/report")
    def get_report(job_id: str):
        try:
            data = engine.report_bytes(job_id)
        except UnknownJobError as exc:
            raise HTTPException(404, detail=str(exc))
        except ReportNotReadyError as exc:
            raise HTTPException(409, detail=str(exc))
        return Response(content=data, media_type="application/json")

    @app.get("/api/corpus/images/{image_id}")
    def get_image(image_id: str):
        try:
            data = engine.store.image_bytes(image_id)
        except ProvkitError as exc:
            raise HTTPException(404, detail=str(exc))
        return Response(content=data, media_type=engine.store.image_media_type(image_id))

    @app.post("/api/scores", status_code=201)
    def post_score(payload: dict):
        try:
            entry = engine.scores.submit(
                object_id=str(payload.get("object_id", "")),
                question=str(payload.get("question", "")),
                rater_id=str(payload.get("rater_id", "")),
                score=payload.get("score"),
                comment=payload.get("comment"),
            )
        except ValueError as exc:
            raise HTTPException(422, detail=str(exc))
        except ProvkitError as exc:
            raise HTTPException(404, detail=str(exc))
        return {
            "object_id": entry.object_id,
            "question": entry.question,
            "rater_id": entry.rater_id,
            "score": entry.score,
        }

    @app.get("/api/eval/distribution")
    def get_distribution(question: str):
        if question not in ("Q1", "Q2"):
            raise HTTPException(422, detail=f"question must be Q1 or Q2, got {question!r}")
        try:
            return JSONResponse(engine.scores.distribution(question).rounded())
        except ProvkitError as exc:
            raise HTTPException(404, detail=str(exc))

    if engine.config.static_dir and engine.config.static_dir.is_dir():
        app.mount("/", StaticFiles(directory=engine.config.static_dir, html=True), name="ui")

    return app
