"""FastAPI app implementing the /v1/score wire protocol.

Responses always carry the declared scale object so clients can
normalize without out-of-band configuration. Schema violations are 400,
over-limit batches 413, scorer failures 500; /healthz is 503 until the
model has loaded.
"""

from __future__ import annotations

import logging
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .scoring import Scorer, ServiceConfig, load_scorer

log = logging.getLogger(__name__)


class ScoreBody(BaseModel):
    source: str = Field(min_length=1)
    target: str = Field(min_length=1)
    language_pair: Optional[str] = None


class BatchBody(BaseModel):
    items: list[ScoreBody] = Field(min_length=1)


def create_app(config: ServiceConfig, scorer: Scorer | None = None) -> FastAPI:
    """Build the service; the model loads on startup unless a scorer is
    injected (tests)."""

    @asynccontextmanager
    async def lifespan(app_: FastAPI):
        if app_.state.scorer is None:
            log.info("loading model %s on %s", config.model, config.device)
            app_.state.scorer = load_scorer(config)
            log.info("model ready")
        yield

    app = FastAPI(title="qe-sidecar", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.config = config
    app.state.scorer = scorer

    @app.exception_handler(RequestValidationError)
    async def schema_violation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "schema violation", "detail": exc.errors()})

    def ready() -> Scorer | None:
        return app.state.scorer

    @app.get("/healthz")
    async def healthz():
        scorer_ = ready()
        if scorer_ is None:
            return JSONResponse(status_code=503, content={"status": "loading", "model": config.model})
        return {"status": "ok", "model": scorer_.model}

    @app.post("/v1/score")
    async def score(body: ScoreBody):
        scorer_ = ready()
        if scorer_ is None:
            return JSONResponse(status_code=503, content={"error": "model still loading"})
        try:
            value = scorer_.score(body.source, body.target)
        except Exception as exc:  # model failure is a 500, not a crash
            log.exception("scoring failed")
            return JSONResponse(status_code=500, content={"error": str(exc)})
        return {"score": value, "scale": scorer_.scale.as_dict()}

    @app.post("/v1/score_batch")
    async def score_batch(body: BatchBody):
        scorer_ = ready()
        if scorer_ is None:
            return JSONResponse(status_code=503, content={"error": "model still loading"})
        if len(body.items) > config.batch_limit:
            return JSONResponse(
                status_code=413,
                content={
                    "error": f"batch of {len(body.items)} exceeds the limit",
                    "limit": config.batch_limit,
                },
            )
        try:
            values = scorer_.score_batch([(item.source, item.target) for item in body.items])
        except Exception as exc:
            log.exception("batch scoring failed")
            return JSONResponse(status_code=500, content={"error": str(exc)})
        return {"scores": values, "scale": scorer_.scale.as_dict()}

    return app
