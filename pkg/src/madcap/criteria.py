"""Sample-wise attack success criteria and success-rate aggregation.

A candidate caption defeats the target representation only when all four
checks hold at once:

* crossmodal  - its similarity to the paired asset strictly exceeds the
  original caption's.
* unimodal    - every NLI judge scores entailment strictly below tau.
* distance    - word-level edit distance is strictly below half the
  corpus's average caption length.
* auxiliary   - the raw output parses, avoids blacklisted negations,
  actually changes the caption, and (for operation-specific prompts)
  performs the requested operation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from .corpus import DataPair, tokenize
from .editscript import DELETE, INSERT, SUBSTITUTE, EditScript, align
from .prompts import GENERAL, GENERATED_PREFIX, PROMPT_KINDS
from .providers import EmbedInput, NliProvider, ProviderError, TokenAnnotation

log = logging.getLogger(__name__)

DEFAULT_TAU = 0.5
DEFAULT_BLACKLIST = frozenset({"no", "not", "empty", "without"})

# Auxiliary rule identifiers, in evaluation order.
RULE_FORMAT = "format_parse"
RULE_BLACKLIST = "negation_blacklist"
RULE_UNCHANGED = "unchanged_caption"
RULE_OP = "op_compliance"
ALL_AUX_RULES = frozenset({RULE_FORMAT, RULE_BLACKLIST, RULE_UNCHANGED, RULE_OP})

# UPOS classes accepted per operation target.
OP_POS_CLASSES = {
    "object": frozenset({"NOUN"}),
    "attribute": frozenset({"ADJ"}),
    "relation": frozenset({"VERB", "ADP"}),
    "count": frozenset({"NUM"}),
}

NLI_DIRECTIONS = ("generated_as_premise", "original_as_premise")


@dataclass(frozen=True)
class CriteriaConfig:
    tau: float = DEFAULT_TAU
    negation_blacklist: frozenset[str] = DEFAULT_BLACKLIST
    prompt_mode: str = GENERAL  # a prompt kind; non-general enables op compliance
    nli_direction: str = "generated_as_premise"
    blacklist_contractions: bool = False  # also flag n't contractions
    enabled_aux_rules: frozenset[str] = ALL_AUX_RULES

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")
        if self.prompt_mode not in PROMPT_KINDS:
            raise ValueError(f"unknown prompt_mode {self.prompt_mode!r}")
        if self.nli_direction not in NLI_DIRECTIONS:
            raise ValueError(f"unknown nli_direction {self.nli_direction!r}")
        unknown = self.enabled_aux_rules - ALL_AUX_RULES
        if unknown:
            raise ValueError(f"unknown auxiliary rules {sorted(unknown)}")


@dataclass(frozen=True)
class CriteriaVerdict:
    """All four flags for one (pair, candidate); metric fields are None for
    candidates whose raw output never parsed into a caption."""

    crossmodal: bool
    unimodal: bool
    distance: bool
    auxiliary: bool
    sim_original: float | None = None
    sim_candidate: float | None = None
    nli_scores: tuple[float, ...] = ()
    edit_distance: int | None = None
    aux_failures: tuple[str, ...] = ()

    @property
    def total(self) -> bool:
        return self.crossmodal and self.unimodal and self.distance and self.auxiliary


def parse_generated(raw: str) -> str | None:
    """Extract the caption payload from a raw model output.

    Valid outputs contain exactly one line starting with the literal
    response prefix, with a non-empty remainder. Returns None otherwise.
    """
    matches = [line for line in raw.splitlines() if line.startswith(GENERATED_PREFIX)]
    if len(matches) != 1:
        return None
    payload = matches[0][len(GENERATED_PREFIX):].strip()
    return payload or None


def eval_crossmodal(pair: DataPair, candidate: str, embedder) -> tuple[bool, float, float]:
    """Strict cosine win of the candidate over the original against the asset."""
    try:
        vectors = embedder.embed([
            EmbedInput(pair.modality, pair.asset_ref),
            EmbedInput("text", pair.caption),
            EmbedInput("text", candidate),
        ])
    except ProviderError as exc:
        raise ProviderError(f"pair {pair.id}: {exc}") from exc
    sim_original = float(vectors[0] @ vectors[1])
    sim_candidate = float(vectors[0] @ vectors[2])
    return sim_candidate > sim_original, sim_original, sim_candidate


def eval_unimodal(original: str, candidate: str, nli: NliProvider,
                  cfg: CriteriaConfig) -> tuple[bool, list[float]]:
    """All NLI judges must score entailment strictly below cfg.tau.

    A partial response (fewer scores than the backend's model count) is an
    error, never a success.
    """
    if cfg.nli_direction == "generated_as_premise":
        query = (candidate, original)
    else:
        query = (original, candidate)
    scores = nli.score_pairs([query])[0]
    expected = getattr(nli, "model_count", None)
    if not scores or (expected is not None and len(scores) != expected):
        raise ProviderError(
            f"nli backend returned {len(scores)} scores, expected {expected}")
    return all(s < cfg.tau for s in scores), list(scores)


def eval_distance(original: str, candidate: str, l_d: float) -> tuple[bool, int]:
    """Word-level edit distance strictly below l_d / 2."""
    if l_d <= 0:
        raise ValueError(f"l_d must be positive, got {l_d}")
    d = align(tokenize(original), tokenize(candidate)).distance
    return d < l_d / 2, d


def _blacklisted(tokens: list[str], cfg: CriteriaConfig) -> bool:
    for tok in tokens:
        if tok in cfg.negation_blacklist:
            return True
        if cfg.blacklist_contractions and tok.endswith("n't"):
            return True
    return False


def _op_compliant(op_kind: str, script: EditScript,
                  original_annotation: Sequence[TokenAnnotation],
                  candidate_annotation: Sequence[TokenAnnotation]) -> bool:
    category, _, target = op_kind.partition("-")
    allowed = OP_POS_CLASSES[target]
    ops = script.ops
    if category == "swap":
        # Exactly two substitutions exchanging each other's words, both of
        # the requested class; nothing else may change.
        if len(ops) != 2 or any(op.kind != SUBSTITUTE for op in ops):
            return False
        a, b = ops
        if a.old_word != b.new_word or a.new_word != b.old_word:
            return False
        return all(original_annotation[op.position].pos in allowed for op in ops)
    if category == "replace":
        if len(ops) != 1 or ops[0].kind != SUBSTITUTE:
            return False
        op = ops[0]
        return (original_annotation[op.position].pos in allowed
                and candidate_annotation[op.target_position].pos in allowed)
    if category == "add":
        if not ops or any(op.kind != INSERT for op in ops):
            return False
        return any(candidate_annotation[op.target_position].pos in allowed for op in ops)
    raise ValueError(f"unknown operation kind {op_kind!r}")


def eval_auxiliary(
    original: str,
    candidate_raw: str,
    cfg: CriteriaConfig,
    annotations: tuple[Sequence[TokenAnnotation], Sequence[TokenAnnotation]] | None = None,
) -> tuple[bool, list[str]]:
    """Rule-based lexical validation of one raw model output.

    Returns (success, failed-rule ids). `annotations` carries the
    (original, candidate) POS annotations and is required only when
    cfg.prompt_mode names a specific operation.
    """
    failures: list[str] = []
    payload = parse_generated(candidate_raw)
    if payload is None:
        if RULE_FORMAT in cfg.enabled_aux_rules:
            failures.append(RULE_FORMAT)
        return not failures, failures

    payload_tokens = tokenize(payload)
    if RULE_BLACKLIST in cfg.enabled_aux_rules and _blacklisted(payload_tokens, cfg):
        failures.append(RULE_BLACKLIST)
    if RULE_UNCHANGED in cfg.enabled_aux_rules and payload_tokens == tokenize(original):
        failures.append(RULE_UNCHANGED)
    if cfg.prompt_mode != GENERAL and RULE_OP in cfg.enabled_aux_rules:
        if annotations is None:
            raise ValueError("operation-specific prompts need POS annotations for compliance checks")
        script = align(tokenize(original), payload_tokens)
        if not _op_compliant(cfg.prompt_mode, script, annotations[0], annotations[1]):
            failures.append(RULE_OP)
    return not failures, failures


@dataclass(frozen=True)
class AsrReport:
    """Column rates are per-criterion means; total is the mean of the
    per-sample conjunctions (not the product of the columns)."""

    crossmodal: float
    unimodal: float
    distance: float
    auxiliary: float
    total: float
    count: int

    def to_dict(self) -> dict:
        return {
            "cross": self.crossmodal,
            "uni": self.unimodal,
            "dist": self.distance,
            "aux": self.auxiliary,
            "total": self.total,
            "count": self.count,
        }


def aggregate_asr(verdicts: Sequence[CriteriaVerdict]) -> AsrReport:
    if not verdicts:
        raise ValueError("cannot aggregate an empty verdict list")
    m = len(verdicts)
    return AsrReport(
        crossmodal=sum(v.crossmodal for v in verdicts) / m,
        unimodal=sum(v.unimodal for v in verdicts) / m,
        distance=sum(v.distance for v in verdicts) / m,
        auxiliary=sum(v.auxiliary for v in verdicts) / m,
        total=sum(v.total for v in verdicts) / m,
        count=m,
    )


def verdict_to_record(pair_id: str, candidate_index: int, raw: str,
                      payload: str | None, verdict: CriteriaVerdict,
                      tokens: Sequence[str]) -> dict:
    """One JSON Lines row of the verdict interchange file."""
    return {
        "pair_id": pair_id,
        "candidate_index": candidate_index,
        "raw": raw,
        "payload": payload,
        "crossmodal": verdict.crossmodal,
        "unimodal": verdict.unimodal,
        "distance": verdict.distance,
        "auxiliary": verdict.auxiliary,
        "total": verdict.total,
        "sim_original": verdict.sim_original,
        "sim_candidate": verdict.sim_candidate,
        "nli_scores": list(verdict.nli_scores),
        "edit_distance": verdict.edit_distance,
        "aux_failures": list(verdict.aux_failures),
        "tokens": list(tokens),
    }


def verdict_from_record(record: dict) -> CriteriaVerdict:
    return CriteriaVerdict(
        crossmodal=record["crossmodal"],
        unimodal=record["unimodal"],
        distance=record["distance"],
        auxiliary=record["auxiliary"],
        sim_original=record["sim_original"],
        sim_candidate=record["sim_candidate"],
        nli_scores=tuple(record["nli_scores"]),
        edit_distance=record["edit_distance"],
        aux_failures=tuple(record["aux_failures"]),
    )
