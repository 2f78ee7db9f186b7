"""Group-wise diversity: attribute-enriched tokens and entropy metrics.

Each word-level edit becomes one or two OP_POS_LEMMA strings (insertions
and deletions; a substitution contributes one of each). Pooled over a
sample set, their frequency distribution yields entropy H (natural log),
normalized entropy, and the distinct-1 unique/total ratio. Only samples
passing the edit-distance criterion contribute tokens, so inflating the
metrics with arbitrary rewrites is impossible by construction.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .editscript import EditScript
from .providers import TokenAnnotation

ENTROPY_LOG_BASE = "e"  # surfaced in reports; all entropies use natural log


class AnnotationMisalignment(ValueError):
    """Annotation tokens do not line up with the edit script's tokens."""


@dataclass(frozen=True)
class AttributeToken:
    op: str  # "I" (insertion) or "D" (deletion)
    pos: str  # Universal POS tag, uppercase
    lemma: str  # lowercase lemma

    def __post_init__(self):
        if self.op not in ("I", "D"):
            raise ValueError(f"op must be 'I' or 'D', got {self.op!r}")

    @property
    def rendered(self) -> str:
        return f"{self.op}_{self.pos}_{self.lemma}"

    @classmethod
    def parse(cls, rendered: str) -> "AttributeToken":
        op, pos, lemma = rendered.split("_", 2)
        return cls(op=op, pos=pos, lemma=lemma)


def _checked(annotation: Sequence[TokenAnnotation], index: int, word: str,
             side: str) -> TokenAnnotation:
    if index >= len(annotation):
        raise AnnotationMisalignment(
            f"{side} annotation has {len(annotation)} tokens, edit references index {index}")
    ann = annotation[index]
    if ann.text != word:
        raise AnnotationMisalignment(
            f"{side} annotation token {index} is {ann.text!r}, edit expects {word!r}")
    return ann


def attribute_tokens(
    script: EditScript,
    original_annotation: Sequence[TokenAnnotation],
    candidate_annotation: Sequence[TokenAnnotation],
) -> list[AttributeToken]:
    """Decompose an edit script into attribute-enriched tokens.

    Deletions are annotated in the original caption's context, insertions
    in the candidate's; substitutions contribute one deletion plus one
    insertion.
    """
    tokens: list[AttributeToken] = []
    for op in script.ops:
        if op.old_word is not None:  # delete, or the delete half of a substitute
            ann = _checked(original_annotation, op.position, op.old_word, "original")
            tokens.append(AttributeToken("D", ann.pos.upper(), ann.lemma.lower()))
        if op.new_word is not None:  # insert, or the insert half of a substitute
            ann = _checked(candidate_annotation, op.target_position, op.new_word, "candidate")
            tokens.append(AttributeToken("I", ann.pos.upper(), ann.lemma.lower()))
    return tokens


def entropy_from_counts(counts: Mapping[str, int]) -> float:
    """Shannon entropy (nats) of a frequency table; 0 for empty tables."""
    total = sum(counts.values())
    if total <= 0:
        return 0.0
    s = sum(c * math.log(c) for c in counts.values() if c > 0)
    return math.log(total) - s / total


def distinct1_from_counts(counts: Mapping[str, int]) -> float:
    total = sum(counts.values())
    if total <= 0:
        return 0.0
    return sum(1 for c in counts.values() if c > 0) / total


def normalized_entropy(entropy: float, unique_tokens: int) -> float:
    """Entropy divided by its maximum ln(unique); defined as 0 below 2 uniques."""
    if unique_tokens < 2:
        return 0.0
    return entropy / math.log(unique_tokens)


@dataclass(frozen=True)
class DiversityReport:
    entropy: float
    normalized_entropy: float
    distinct1: float | None  # None when no tokens survived gating
    unique_tokens: int
    total_tokens: int
    included_samples: int
    excluded_samples: int
    counts: dict[str, int]
    distribution: dict[str, float]
    log_base: str = ENTROPY_LOG_BASE

    @property
    def empty(self) -> bool:
        return self.total_tokens == 0

    def to_dict(self) -> dict:
        return {
            "entropy": self.entropy,
            "normalized_entropy": self.normalized_entropy,
            "distinct1": self.distinct1,
            "unique_tokens": self.unique_tokens,
            "total_tokens": self.total_tokens,
            "included_samples": self.included_samples,
            "excluded_samples": self.excluded_samples,
            "log_base": self.log_base,
            "empty": self.empty,
        }


def diversity_report(selected: Iterable[tuple[Any, Sequence[AttributeToken]]]) -> DiversityReport:
    """Pool attribute tokens over (verdict, tokens) samples and score them.

    Only samples whose verdict passed the distance criterion contribute;
    the rest are counted as excluded. With zero surviving tokens the
    report carries entropy 0 and a None distinct-1 sentinel.
    """
    counts: Counter[str] = Counter()
    included = excluded = 0
    for verdict, tokens in selected:
        if not verdict.distance:
            excluded += 1
            continue
        included += 1
        counts.update(tok.rendered for tok in tokens)

    total = sum(counts.values())
    unique = len(counts)
    h = entropy_from_counts(counts)
    return DiversityReport(
        entropy=h,
        normalized_entropy=normalized_entropy(h, unique),
        distinct1=(unique / total) if total else None,
        unique_tokens=unique,
        total_tokens=total,
        included_samples=included,
        excluded_samples=excluded,
        counts=dict(counts),
        distribution={tok: c / total for tok, c in counts.items()} if total else {},
    )


def write_token_distribution(report: DiversityReport, path: str | Path) -> None:
    """CSV export (token,count,probability), heaviest tokens first."""
    rows = sorted(report.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["token", "count", "probability"])
        for token, count in rows:
            writer.writerow([token, count, repr(report.distribution[token])])
