"""The bridge HTTP surface.

One role-multiplexed service: POST /v1/embed, /v1/nli, /v1/annotate,
/v1/itm plus GET /healthz. All endpoints are stateless; responses are
canonical JSON (sorted keys, compact separators) with floats rounded to
seven decimals in transit, so mock-mode bodies byte-match the shared
golden fixtures.
"""

from __future__ import annotations

import json
import logging
from typing import Any

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .config import BridgeConfig
from .live import LiveBackends, ModelUnavailable
from .mocks import EMBED_DIM, MockBackends, tokenize

log = logging.getLogger(__name__)

EMBED_KINDS = ("text", "image", "video", "audio")
WIRE_DECIMALS = 7
ROLES = ("embedding", "nli", "annotation", "itm")


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def wire_round(value: float) -> float:
    return round(float(value), WIRE_DECIMALS)


def _respond(data: dict) -> Response:
    return Response(content=canonical_json(data), media_type="application/json")


class EmbedItem(BaseModel):
    kind: str
    value: str


class EmbedRequest(BaseModel):
    inputs: list[EmbedItem]


class NliPair(BaseModel):
    premise: str
    hypothesis: str


class NliRequest(BaseModel):
    pairs: list[NliPair]


class AnnotateRequest(BaseModel):
    texts: list[str]


class ItmRequest(BaseModel):
    asset: str
    caption: str


def create_app(config: BridgeConfig | None = None) -> FastAPI:
    config = config or BridgeConfig()
    app = FastAPI(title="modelbridge", docs_url=None, redoc_url=None)
    mock = MockBackends(seed=config.seed) if config.mock else None
    live = None if config.mock else LiveBackends(config)

    def embed_one(kind: str, value: str):
        if mock is not None:
            return mock.embed_one(value)
        return live.embed_one(kind, value)

    @app.get("/healthz")
    def healthz() -> Response:
        if mock is not None:
            roles: dict[str, Any] = {role: True for role in ROLES}
            return _respond({"mode": "mock", "seed": config.seed, "roles": roles})
        roles = {
            "embedding": {"configured": sorted(config.embedding_models),
                          "loaded": live.loaded["embedding"]},
            "nli": {"configured": list(config.nli_models), "loaded": live.loaded["nli"]},
            "annotation": {"configured": config.annotation_model,
                           "loaded": live.loaded["annotation"]},
            "itm": {"configured": config.itm_model, "loaded": live.loaded["itm"]},
        }
        return _respond({"mode": "live", "roles": roles})

    @app.post("/v1/embed")
    def embed(request: EmbedRequest) -> Response:
        for item in request.inputs:
            if item.kind not in EMBED_KINDS:
                raise HTTPException(400, f"unknown input kind {item.kind!r}")
        try:
            vectors = [embed_one(item.kind, item.value) for item in request.inputs]
        except ModelUnavailable as exc:
            raise HTTPException(503, str(exc)) from exc
        dim = len(vectors[0]) if vectors else EMBED_DIM
        return _respond({
            "vectors": [[wire_round(x) for x in vec] for vec in vectors],
            "dim": dim,
        })

    @app.post("/v1/nli")
    def nli(request: NliRequest) -> Response:
        for pair in request.pairs:
            if not pair.premise.strip() or not pair.hypothesis.strip():
                raise HTTPException(400, "empty premise or hypothesis")
        try:
            backend = mock.nli_scores if mock is not None else live.nli_scores
            scores = [[wire_round(s) for s in backend(p.premise, p.hypothesis)]
                      for p in request.pairs]
        except ModelUnavailable as exc:
            raise HTTPException(503, str(exc)) from exc
        return _respond({"scores": scores})

    @app.post("/v1/annotate")
    def annotate(request: AnnotateRequest) -> Response:
        try:
            backend = mock.annotate_one if mock is not None else live.annotate_one
            annotations = [backend(text) for text in request.texts]
        except ModelUnavailable as exc:
            raise HTTPException(503, str(exc)) from exc
        # Alignment contract: annotation tokens must equal the shared
        # word tokenizer's output for the same text.
        for text, per_text in zip(request.texts, annotations):
            got = [a["text"] for a in per_text]
            if got != tokenize(text):
                raise HTTPException(
                    422, f"annotator tokens {got!r} misaligned with tokenizer for {text!r}")
        return _respond({"annotations": annotations})

    @app.post("/v1/itm")
    def itm(request: ItmRequest) -> Response:
        try:
            backend = mock.itm_score if mock is not None else live.itm_score
            score = backend(request.asset, request.caption)
        except ModelUnavailable as exc:
            raise HTTPException(503, str(exc)) from exc
        return _respond({"score": wire_round(score)})

    return app
