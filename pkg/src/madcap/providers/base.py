"""Provider abstractions: roles, backend specs, and the call protocols."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

ROLES = ("embedding", "nli", "generation", "annotation", "itm")

# Input kinds accepted by the embedding role. Text is embedded directly;
# the other kinds mark asset references that the backend resolves.
EMBED_KINDS = ("text", "image", "video", "audio")


class ProviderError(RuntimeError):
    """A backend call failed (after retries, where applicable)."""


@dataclass(frozen=True)
class ProviderSpec:
    """One role's backend configuration.

    backend "mock" runs the deterministic in-process implementation seeded
    with `seed`; backend "http" targets a bridge service (or, for the
    generation role, any OpenAI-compatible chat-completions endpoint).
    """

    role: str
    backend: str = "mock"
    seed: int = 0
    base_url: str | None = None
    model_id: str | None = None
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown provider role {self.role!r}")
        if self.backend not in ("mock", "http"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "http" and not self.base_url:
            raise ValueError(f"http backend for role {self.role!r} needs base_url")

    @property
    def identity(self) -> str:
        """Stable backend identity string (used in cache keys)."""
        if self.backend == "mock":
            return f"mock:{self.seed}"
        return f"http:{self.base_url}:{self.model_id or ''}"

    @classmethod
    def from_dict(cls, role: str, data: dict) -> "ProviderSpec":
        known = {"backend", "seed", "base_url", "model_id", "timeout", "retries"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown provider fields for role {role!r}: {sorted(extra)}")
        return cls(role=role, **data)

    def to_dict(self) -> dict:
        out = {"backend": self.backend}
        if self.backend == "mock":
            out["seed"] = self.seed
        else:
            out.update(base_url=self.base_url, model_id=self.model_id,
                       timeout=self.timeout, retries=self.retries)
        return out


@dataclass(frozen=True)
class EmbedInput:
    kind: str  # one of EMBED_KINDS
    value: str

    def __post_init__(self):
        if self.kind not in EMBED_KINDS:
            raise ValueError(f"unknown embed input kind {self.kind!r}")


@dataclass(frozen=True)
class TokenAnnotation:
    text: str
    pos: str  # Universal POS tag
    lemma: str


@dataclass(frozen=True)
class SamplingParams:
    """Generation sampling configuration; defaults follow the campaign recipe."""

    top_p: float = 0.95
    temperature: float = 0.7
    seed: int = 0
    max_tokens: int = 256


@runtime_checkable
class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, inputs: Sequence[EmbedInput]) -> np.ndarray:
        """Return one unit-norm vector per input, shape (len(inputs), dim)."""


@runtime_checkable
class NliProvider(Protocol):
    model_count: int

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[list[float]]:
        """Entailment probability of each (premise, hypothesis) pair, one
        score per backing model, each in [0, 1]."""


@runtime_checkable
class GenerationProvider(Protocol):
    def generate(self, prompt: str, n: int, params: SamplingParams) -> list[str]:
        """Exactly n raw completions from one parallel batch request."""


@runtime_checkable
class AnnotationProvider(Protocol):
    def annotate(self, texts: Sequence[str]) -> list[list[TokenAnnotation]]:
        """Per-text (token, UPOS, lemma) triples, aligned with tokenize()."""


@runtime_checkable
class ItmProvider(Protocol):
    def score(self, asset_ref: str, caption: str) -> float:
        """Match probability from yes/no next-token logits, in (0, 1)."""


class CallStats:
    """Backend-call counters; lock-guarded so concurrent workers keep the
    budget accounting exact."""

    def __init__(self):
        self.calls = 0
        self.units = 0
        self._lock = threading.Lock()

    def bump(self, units: int = 1) -> None:
        with self._lock:
            self.calls += 1
            self.units += units


def itm_match_probability(yes_logit: float, no_logit: float) -> float:
    """Two-way softmax over yes/no logits: exp(y) / (exp(y) + exp(n))."""
    m = max(yes_logit, no_logit)
    ey = np.exp(yes_logit - m)
    en = np.exp(no_logit - m)
    return float(ey / (ey + en))
