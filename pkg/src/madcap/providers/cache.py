"""Content-addressed, write-once cache for provider responses.

Layout: one JSON file per key digest under the cache root, plus an
append-only ``index.jsonl`` listing stored keys. Write-once semantics make
concurrent writers safe (first atomic rename wins; later writers adopt the
stored value), and identical logical requests map to identical keys across
runs, so a cleared cache replays to byte-identical campaign outputs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .base import EmbedInput, SamplingParams, TokenAnnotation

log = logging.getLogger(__name__)

_MISS = object()


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def request_digest(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheKey:
    role: str
    backend_id: str
    op: str
    digest: str  # sha256 of the canonicalized request payload

    @property
    def file_digest(self) -> str:
        return hashlib.sha256(
            "\x1f".join((self.role, self.backend_id, self.op, self.digest)).encode("utf-8")
        ).hexdigest()


class ResponseCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.jsonl"

    def _path(self, key: CacheKey) -> Path:
        return self.root / f"{key.file_digest}.json"

    def get(self, key: CacheKey) -> Any:
        """Stored value, or the module-level _MISS sentinel."""
        path = self._path(key)
        if not path.exists():
            return _MISS
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
            return record["value"]
        except (json.JSONDecodeError, KeyError, OSError) as exc:
            log.warning("corrupt cache record %s (%s); treating as miss", path.name, exc)
            return _MISS

    def put(self, key: CacheKey, value: Any) -> Any:
        """Store value under key; returns the winning stored value.

        First writer wins: the record lands via an atomic hard link, so
        concurrent puts of one key converge on a single stored value and
        every caller adopts it.
        """
        path = self._path(key)
        record = {
            "key": {"role": key.role, "backend": key.backend_id, "op": key.op, "digest": key.digest},
            "value": value,
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(record))
            try:
                os.link(tmp, path)
            except FileExistsError:
                existing = self.get(key)
                if existing is not _MISS:
                    return existing
                os.replace(tmp, path)  # stored record was corrupt; take over
                tmp = None
        finally:
            if tmp is not None and os.path.exists(tmp):
                os.unlink(tmp)
        with open(self._index_path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json({"file": path.name, "role": key.role, "op": key.op}) + "\n")
        return value


class CachedEmbedding:
    """Per-item caching so overlapping batches across stages share entries."""

    def __init__(self, inner, cache: ResponseCache, backend_id: str):
        self.inner = inner
        self.cache = cache
        self.backend_id = backend_id
        self.dim = inner.dim

    def _key(self, item: EmbedInput) -> CacheKey:
        return CacheKey("embedding", self.backend_id, "embed",
                        request_digest({"kind": item.kind, "value": item.value}))

    def embed(self, inputs: Sequence[EmbedInput]) -> np.ndarray:
        vectors: list[Any] = [None] * len(inputs)
        missing: list[int] = []
        for i, item in enumerate(inputs):
            hit = self.cache.get(self._key(item))
            if hit is _MISS:
                missing.append(i)
            else:
                vectors[i] = np.asarray(hit, dtype=float)
        if missing:
            fresh = self.inner.embed([inputs[i] for i in missing])
            for row, i in enumerate(missing):
                stored = self.cache.put(self._key(inputs[i]), [float(x) for x in fresh[row]])
                vectors[i] = np.asarray(stored, dtype=float)
        return np.stack(vectors)


class CachedNli:
    def __init__(self, inner, cache: ResponseCache, backend_id: str):
        self.inner = inner
        self.cache = cache
        self.backend_id = backend_id
        self.model_count = inner.model_count

    def _key(self, pair: tuple[str, str]) -> CacheKey:
        return CacheKey("nli", self.backend_id, "nli",
                        request_digest({"premise": pair[0], "hypothesis": pair[1]}))

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[list[float]]:
        scores: list[Any] = [None] * len(pairs)
        missing = []
        for i, pair in enumerate(pairs):
            hit = self.cache.get(self._key(pair))
            if hit is _MISS:
                missing.append(i)
            else:
                scores[i] = list(hit)
        if missing:
            fresh = self.inner.score_pairs([pairs[i] for i in missing])
            for row, i in enumerate(missing):
                scores[i] = list(self.cache.put(self._key(pairs[i]), [float(s) for s in fresh[row]]))
        return scores


class CachedGeneration:
    """Batch-level caching: the (prompt, n, params) triple is the unit."""

    def __init__(self, inner, cache: ResponseCache, backend_id: str):
        self.inner = inner
        self.cache = cache
        self.backend_id = backend_id

    def generate(self, prompt: str, n: int, params: SamplingParams) -> list[str]:
        key = CacheKey("generation", self.backend_id, "generate", request_digest({
            "prompt": prompt, "n": n, "top_p": params.top_p,
            "temperature": params.temperature, "seed": params.seed,
            "max_tokens": params.max_tokens,
        }))
        hit = self.cache.get(key)
        if hit is not _MISS:
            return list(hit)
        return list(self.cache.put(key, self.inner.generate(prompt, n, params)))


class CachedAnnotation:
    def __init__(self, inner, cache: ResponseCache, backend_id: str):
        self.inner = inner
        self.cache = cache
        self.backend_id = backend_id

    def _key(self, text: str) -> CacheKey:
        return CacheKey("annotation", self.backend_id, "annotate", request_digest({"text": text}))

    def annotate(self, texts: Sequence[str]) -> list[list[TokenAnnotation]]:
        out: list[Any] = [None] * len(texts)
        missing = []
        for i, text in enumerate(texts):
            hit = self.cache.get(self._key(text))
            if hit is _MISS:
                missing.append(i)
            else:
                out[i] = [TokenAnnotation(*row) for row in hit]
        if missing:
            fresh = self.inner.annotate([texts[i] for i in missing])
            for row, i in enumerate(missing):
                stored = self.cache.put(
                    self._key(texts[i]), [[a.text, a.pos, a.lemma] for a in fresh[row]])
                out[i] = [TokenAnnotation(*r) for r in stored]
        return out


class CachedItm:
    def __init__(self, inner, cache: ResponseCache, backend_id: str):
        self.inner = inner
        self.cache = cache
        self.backend_id = backend_id

    def score(self, asset_ref: str, caption: str) -> float:
        key = CacheKey("itm", self.backend_id, "itm",
                       request_digest({"asset": asset_ref, "caption": caption}))
        hit = self.cache.get(key)
        if hit is not _MISS:
            return float(hit)
        return float(self.cache.put(key, self.inner.score(asset_ref, caption)))


_WRAPPERS = {
    "embedding": CachedEmbedding,
    "nli": CachedNli,
    "generation": CachedGeneration,
    "annotation": CachedAnnotation,
    "itm": CachedItm,
}


def wrap_cached(role: str, inner, cache: ResponseCache | None, backend_id: str):
    if cache is None:
        return inner
    return _WRAPPERS[role](inner, cache, backend_id)
