"""The HTTP face of the scorer service.

Endpoints (JSON bodies, UTF-8):

    POST /classify  {"text", "label"}                  -> {"proba"}
    POST /predict   {"text"}                           -> {"label"}
    POST /lm_loss   {"text"}                           -> {"loss"}
    POST /mask_fill {"tokens", "position", "mode",
                     "class", "top_n"}                 -> {"suggestions"}
    POST /embed     {"text"}                           -> {"vector"}
    GET  /labels                                       -> {"labels"}

Malformed requests get a 400 with a schema message.
"""

from __future__ import annotations

from typing import Literal

import uvicorn
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from textcf_service.config import ServiceConfig
from textcf_service.scoring import ScorerBackend


class ClassifyRequest(BaseModel):
    text: str
    label: str


class TextRequest(BaseModel):
    text: str


class MaskFillRequest(BaseModel):
    tokens: list[str]
    position: int
    mode: Literal["replace", "insert"]
    class_id: str = Field(alias="class")
    top_n: int = Field(gt=0)

    model_config = {"populate_by_name": True}


def build_app(backend: ScorerBackend) -> FastAPI:
    app = FastAPI(title="textcf scorer service")

    @app.exception_handler(RequestValidationError)
    async def schema_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "request does not match the endpoint schema",
                     "detail": exc.errors()},
        )

    @app.get("/labels")
    def labels():
        return {"labels": list(backend.labels)}

    @app.post("/classify")
    def classify(req: ClassifyRequest):
        try:
            return {"proba": backend.classify_proba(req.text, req.label)}
        except KeyError:
            raise HTTPException(status_code=400, detail=f"unknown label {req.label!r}")

    @app.post("/predict")
    def predict(req: TextRequest):
        return {"label": backend.predict(req.text)}

    @app.post("/lm_loss")
    def lm_loss(req: TextRequest):
        return {"loss": backend.lm_loss(req.text)}

    @app.post("/mask_fill")
    def mask_fill(req: MaskFillRequest):
        try:
            suggestions = backend.mask_fill(
                req.tokens, req.position, req.mode, req.class_id, req.top_n
            )
        except KeyError:
            raise HTTPException(status_code=400, detail=f"unknown class {req.class_id!r}")
        except IndexError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"suggestions": suggestions}

    @app.post("/embed")
    def embed(req: TextRequest):
        return {"vector": backend.embed(req.text)}

    return app


def serve(config: ServiceConfig) -> None:
    """Load the checkpoints and serve until interrupted."""
    backend = ScorerBackend(config)
    app = build_app(backend)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
