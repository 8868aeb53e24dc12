"""HTTP service exposing recommendations from one loaded model artifact.

The service is read-only over a single artifact (hot-swap is by restart).
Endpoints:
  POST /api/recommend   draft fields + k -> ranked journals
  GET  /api/journals    journal table (id, name)
  GET  /api/model       loaded-model info
  GET  /healthz         liveness

Errors are JSON {"error": name, "detail": text} with 400-class codes for
invalid requests and 503 before an artifact is loaded.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .corpus import PaperRecord
from .errors import AllFieldsEmpty
from .recommender import DownstreamModel, recommend_top_k
from .text import normalize_text

MAX_K = 100


class RecommendRequest(BaseModel):
    title: str = ""
    abstract: str = ""
    keywords: list[str] = Field(default_factory=list)
    k: int = Field(default=10, ge=1, le=MAX_K)
    use_scopes: bool | None = None


class ApiError(Exception):
    def __init__(self, name: str, detail: str, status_code: int):
        self.name = name
        self.detail = detail
        self.status_code = status_code
        super().__init__(detail)


class ServiceState:
    """The loaded model plus a lock-guarded request counter."""

    def __init__(self, model: DownstreamModel | None = None):
        self.model = model
        self.model_info = model.model_info() if model is not None else None
        self._lock = threading.Lock()
        self._requests_served = 0

    def load(self, artifact_dir) -> None:
        model = DownstreamModel.load(artifact_dir)
        self.model = model
        self.model_info = model.model_info()

    def count_request(self) -> None:
        with self._lock:
            self._requests_served += 1

    @property
    def requests_served(self) -> int:
        with self._lock:
            return self._requests_served

    def require_model(self) -> DownstreamModel:
        if self.model is None:
            raise ApiError("ModelNotLoaded", "no model artifact loaded yet", 503)
        return self.model


def handle_recommend(model: DownstreamModel, req: RecommendRequest) -> dict:
    """Serving path: normalize -> compose per artifact combo -> encode ->
    forward -> top-K. Adds no transformation beyond the library operations.

    Latency budget (documented, not enforced): single-digit milliseconds
    for the toy encoder on CPU, tens of milliseconds for a pretrained
    backbone at max_len 256.
    """
    if req.use_scopes is not None and req.use_scopes != model.combo.use_scopes:
        raise ApiError(
            "UnsupportedOption",
            f"artifact was trained {'with' if model.combo.use_scopes else 'without'} "
            "scopes; use_scopes cannot be toggled per request",
            400,
        )
    fields = [req.title, req.abstract, " ".join(req.keywords)]
    if not any(normalize_text(f) for f in fields):
        raise ApiError("AllFieldsEmpty", "all request fields normalize to empty", 400)
    record = PaperRecord(id="request", title=req.title, abstract=req.abstract,
                         keywords=tuple(req.keywords), journal_id="")
    try:
        text = model.compose(record)
    except AllFieldsEmpty as exc:
        raise ApiError("AllFieldsEmpty", str(exc), 400) from None
    probs = model.predict_proba([text])[0]
    ranked = recommend_top_k(probs, req.k, journal_ids=model.journal_ids)
    names = {j.journal_id: j.name for j in model.journals}
    return {
        "items": [
            {"journal_id": jid, "name": names[jid], "score": score}
            for jid, score in ranked.items
        ],
        "model_info": model.model_info(),
    }


def create_app(artifact_dir=None, model: DownstreamModel | None = None,
               static_dir=None) -> FastAPI:
    """Build the service app; loads the artifact eagerly when a dir is given."""
    state = ServiceState(model)
    if artifact_dir is not None:
        state.load(artifact_dir)

    app = FastAPI(title="simrec", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def api_error_handler(_: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code,
                            content={"error": exc.name, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"error": "ValidationError", "detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/api/journals")
    def journals():
        model = state.require_model()
        return [{"journal_id": j.journal_id, "name": j.name} for j in model.journals]

    @app.get("/api/model")
    def model_info():
        state.require_model()
        info = dict(state.model_info)
        info["requests_served"] = state.requests_served
        return info

    @app.post("/api/recommend")
    def recommend(req: RecommendRequest):
        model = state.require_model()
        response = handle_recommend(model, req)
        state.count_request()
        return response

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
