"""Prompt templates for deceptive-caption generation.

The nine templates (one general, eight operation-specific) are bundled as
golden text files; their wording is load-bearing because the auxiliary
criterion validates outputs against it (the response prefix and the
negation blacklist both come from the prompt text).
"""

from __future__ import annotations

import math
from importlib import resources

GENERATED_PREFIX = "Generated Caption: "

GENERAL = "general"
SPECIFIC_KINDS = (
    "replace-object",
    "replace-attribute",
    "replace-relation",
    "replace-count",
    "add-object",
    "add-attribute",
    "swap-object",
    "swap-attribute",
)
PROMPT_KINDS = (GENERAL,) + SPECIFIC_KINDS

# Scenario phrase embedded in each specific template's task line.
SCENARIO_PHRASES = {
    "replace-object": "object replacement",
    "replace-attribute": "attribute replacement",
    "replace-relation": "relation replacement",
    "replace-count": "counting replacement",
    "add-object": "object addition",
    "add-attribute": "attribute addition",
    "swap-object": "object swapping",
    "swap-attribute": "attribute swapping",
}

CAPTION_MARKER = "[Given Caption]"


class UnknownTemplateError(KeyError):
    pass


def load_template(kind: str) -> str:
    if kind not in PROMPT_KINDS:
        raise UnknownTemplateError(f"unknown prompt template {kind!r}, expected one of {PROMPT_KINDS}")
    return resources.files("madcap").joinpath("templates", f"{kind}.txt").read_text(encoding="utf-8")


def max_word_distance_plus_one(l_d: float) -> int:
    """Placeholder value for the prompt's "fewer than" clause.

    The distance criterion is strict (edit distance < l_d / 2), so the
    prompt asks for fewer than floor(l_d / 2) + 1 changes: the largest
    integer edit count satisfying the criterion is floor(l_d / 2) when
    l_d / 2 is fractional, and the +1 keeps "fewer than" aligned with
    the strict threshold in every case.
    """
    return math.floor(l_d / 2) + 1


def render_prompt(kind: str, modality: str, caption: str, l_d: float) -> str:
    """Fill a template's placeholders; the result is byte-stable per input."""
    template = load_template(kind)
    return template.format(
        contents_modality=modality,
        caption=caption,
        max_word_distance_plus_one=max_word_distance_plus_one(l_d),
    )


def split_conversation(rendered_prompt: str) -> tuple[str, str]:
    """Split a rendered prompt into (system, user) turns for data export.

    The system turn carries everything before the given-caption block; the
    user turn carries the block itself plus the closing instruction.
    Joining them with a blank line reproduces the original prompt.
    """
    idx = rendered_prompt.index(CAPTION_MARKER)
    return rendered_prompt[:idx].rstrip("\n"), rendered_prompt[idx:].rstrip("\n")
