"""Deceptive-caption attacks on multimodal embedding models.

Generates candidate captions with an LLM backend, scores them against
crossmodal / unimodal / distance / auxiliary success criteria, measures
group-wise token diversity, and curates successful samples into
self-training exports.
"""

from .campaign import (
    CampaignConfig,
    CampaignError,
    CampaignResult,
    SelectionConfig,
    export_rft,
    run_attack,
    run_round,
    transfer_matrix,
)
from .corpus import Corpus, CorpusError, DataPair, ingest, normalize_text, tokenize
from .criteria import (
    AsrReport,
    CriteriaConfig,
    CriteriaVerdict,
    aggregate_asr,
    eval_auxiliary,
    eval_crossmodal,
    eval_distance,
    eval_unimodal,
    parse_generated,
)
from .diversity import (
    AttributeToken,
    DiversityReport,
    attribute_tokens,
    diversity_report,
    entropy_from_counts,
)
from .editscript import EditOp, EditScript, align
from .prompts import PROMPT_KINDS, render_prompt
from .selection import CandidatePool, PoolCandidate, SelectionState, best_of_n, gibbs_select, select_rft

__version__ = "0.1.0"

__all__ = [
    "AsrReport",
    "AttributeToken",
    "best_of_n",
    "aggregate_asr",
    "align",
    "attribute_tokens",
    "CampaignConfig",
    "CampaignError",
    "CampaignResult",
    "CandidatePool",
    "Corpus",
    "CorpusError",
    "CriteriaConfig",
    "CriteriaVerdict",
    "DataPair",
    "DiversityReport",
    "diversity_report",
    "EditOp",
    "EditScript",
    "entropy_from_counts",
    "eval_auxiliary",
    "eval_crossmodal",
    "eval_distance",
    "eval_unimodal",
    "export_rft",
    "gibbs_select",
    "ingest",
    "normalize_text",
    "parse_generated",
    "PoolCandidate",
    "PROMPT_KINDS",
    "render_prompt",
    "run_attack",
    "run_round",
    "select_rft",
    "SelectionConfig",
    "SelectionState",
    "tokenize",
    "transfer_matrix",
]
