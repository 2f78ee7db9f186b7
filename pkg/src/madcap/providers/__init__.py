"""Pluggable embedding / NLI / generation / annotation / ITM backends."""

from __future__ import annotations

from .base import (
    EMBED_KINDS,
    ROLES,
    CallStats,
    EmbedInput,
    EmbeddingProvider,
    GenerationProvider,
    ItmProvider,
    NliProvider,
    AnnotationProvider,
    ProviderError,
    ProviderSpec,
    SamplingParams,
    TokenAnnotation,
    itm_match_probability,
)
from .cache import CacheKey, ResponseCache, canonical_json, request_digest, wrap_cached
from .mock import MockAnnotation, MockEmbedding, MockGeneration, MockItm, MockNli

_MOCKS = {
    "embedding": MockEmbedding,
    "nli": MockNli,
    "generation": MockGeneration,
    "annotation": MockAnnotation,
    "itm": MockItm,
}


def build_provider(spec: ProviderSpec, cache: ResponseCache | None = None):
    """Instantiate the backend for a spec, optionally behind the cache."""
    if spec.backend == "mock":
        inner = _MOCKS[spec.role](seed=spec.seed)
    else:
        from . import http as _http  # deferred: keeps mock-only runs httpx-free

        builders = {
            "embedding": _http.BridgeEmbedding,
            "nli": _http.BridgeNli,
            "generation": _http.OpenAIGeneration,
            "annotation": _http.BridgeAnnotation,
            "itm": _http.BridgeItm,
        }
        inner = builders[spec.role](spec)
    return wrap_cached(spec.role, inner, cache, spec.identity)


__all__ = [
    "EMBED_KINDS",
    "ROLES",
    "CallStats",
    "CacheKey",
    "EmbedInput",
    "EmbeddingProvider",
    "GenerationProvider",
    "ItmProvider",
    "NliProvider",
    "AnnotationProvider",
    "ProviderError",
    "ProviderSpec",
    "ResponseCache",
    "SamplingParams",
    "TokenAnnotation",
    "build_provider",
    "canonical_json",
    "itm_match_probability",
    "request_digest",
    "wrap_cached",
]
