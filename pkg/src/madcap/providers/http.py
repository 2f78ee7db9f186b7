"""HTTP-backed providers.

Embedding, NLI, annotation, and ITM roles speak the bridge service's JSON
API (POST /v1/embed, /v1/nli, /v1/annotate, /v1/itm, GET /healthz). The
generation role speaks any OpenAI-compatible chat-completions endpoint.
"""

from __future__ import annotations

import logging
from typing import Sequence

import httpx
import numpy as np

from .base import (
    EmbedInput,
    ProviderError,
    ProviderSpec,
    SamplingParams,
    TokenAnnotation,
)

log = logging.getLogger(__name__)


class _HttpBase:
    def __init__(self, spec: ProviderSpec, client: httpx.Client | None = None):
        self.spec = spec
        self.client = client or httpx.Client(base_url=spec.base_url, timeout=spec.timeout)

    def _post(self, path: str, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self.spec.retries + 1):
            try:
                resp = self.client.post(path, json=payload)
                resp.raise_for_status()
                return resp.json()
            except (httpx.HTTPError, ValueError) as exc:
                last = exc
                log.warning("%s %s failed (attempt %d/%d): %s",
                            self.spec.role, path, attempt + 1, self.spec.retries + 1, exc)
        raise ProviderError(f"{self.spec.role} backend {self.spec.base_url}{path} failed: {last}") from last


class BridgeEmbedding(_HttpBase):
    def __init__(self, spec: ProviderSpec, client: httpx.Client | None = None):
        super().__init__(spec, client)
        self.dim: int | None = None

    def embed(self, inputs: Sequence[EmbedInput]) -> np.ndarray:
        data = self._post("/v1/embed", {
            "inputs": [{"kind": i.kind, "value": i.value} for i in inputs],
        })
        vectors = np.asarray(data["vectors"], dtype=float)
        if vectors.shape != (len(inputs), data["dim"]):
            raise ProviderError(
                f"embedding batch shape mismatch: got {vectors.shape}, "
                f"expected ({len(inputs)}, {data['dim']})")
        if self.dim is None:
            self.dim = int(data["dim"])
        elif self.dim != int(data["dim"]):
            raise ProviderError(f"embedding dim changed from {self.dim} to {data['dim']}")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ProviderError("embedding backend returned non-unit vectors")
        return vectors / norms[:, None]


class BridgeNli(_HttpBase):
    def __init__(self, spec: ProviderSpec, client: httpx.Client | None = None):
        super().__init__(spec, client)
        self.model_count: int | None = None

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[list[float]]:
        data = self._post("/v1/nli", {
            "pairs": [{"premise": p, "hypothesis": h} for p, h in pairs],
        })
        scores = data["scores"]
        if len(scores) != len(pairs):
            raise ProviderError(f"nli backend returned {len(scores)} rows for {len(pairs)} pairs")
        if self.model_count is None and scores:
            self.model_count = len(scores[0])
        for row in scores:
            if self.model_count is not None and len(row) != self.model_count:
                raise ProviderError("nli backend returned inconsistent model counts")
            if any(not 0.0 <= s <= 1.0 for s in row):
                raise ProviderError("nli backend returned a probability outside [0, 1]")
        return [list(map(float, row)) for row in scores]


class BridgeAnnotation(_HttpBase):
    def annotate(self, texts: Sequence[str]) -> list[list[TokenAnnotation]]:
        data = self._post("/v1/annotate", {"texts": list(texts)})
        annotations = data["annotations"]
        if len(annotations) != len(texts):
            raise ProviderError("annotation backend dropped texts from the batch")
        return [
            [TokenAnnotation(a["text"], a["pos"], a["lemma"]) for a in per_text]
            for per_text in annotations
        ]


class BridgeItm(_HttpBase):
    def score(self, asset_ref: str, caption: str) -> float:
        data = self._post("/v1/itm", {"asset": asset_ref, "caption": caption})
        score = float(data["score"])
        if not 0.0 < score < 1.0:
            raise ProviderError(f"itm backend returned score {score} outside (0, 1)")
        return score


class OpenAIGeneration(_HttpBase):
    """Chat-completions client; one parallel batch of n choices per call."""

    def generate(self, prompt: str, n: int, params: SamplingParams) -> list[str]:
        if n < 1:
            raise ProviderError("generation batch size must be >= 1")
        data = self._post("/v1/chat/completions", {
            "model": self.spec.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "n": n,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "seed": params.seed,
            "max_tokens": params.max_tokens,
        })
        choices = data.get("choices", [])
        if len(choices) < n:
            raise ProviderError(f"generation backend returned {len(choices)} of {n} completions")
        return [c["message"]["content"] for c in choices[:n]]


def health_check(spec: ProviderSpec, client: httpx.Client | None = None) -> dict:
    """GET /healthz on a bridge backend; raises ProviderError when unreachable."""
    own = client or httpx.Client(base_url=spec.base_url, timeout=spec.timeout)
    try:
        resp = own.get("/healthz")
        resp.raise_for_status()
        return resp.json()
    except (httpx.HTTPError, ValueError) as exc:
        raise ProviderError(f"health check failed for {spec.base_url}: {exc}") from exc
    finally:
        if client is None:
            own.close()
