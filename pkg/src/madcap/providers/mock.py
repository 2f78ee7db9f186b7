"""Deterministic in-process provider mocks.

Every mock is a pure function of (seed, input) so runs reproduce across
processes. The constructions are documented contracts (the HTTP bridge's
mock mode reimplements them and golden fixtures pin byte equality):

embedding   64-dim vector = L2-normalized sum of per-token unit vectors,
            one seeded-hash Gaussian unit vector per token occurrence of
            the input string (texts and asset refs are tokenized alike).
nli         three agreeing judges, each scoring containment toward the
            hypothesis: |tokens(premise) & tokens(hypothesis)| /
            |tokens(hypothesis)| over unique tokens (0 when the
            hypothesis has no tokens).
generation  seeded word-level perturbations of the caption parsed from
            the prompt's given-caption block, emitted in the expected
            "Generated Caption: ..." format (with deliberate rule-breaking
            outputs mixed in at low rates).
annotation  lexicon lookup, then suffix rules (-ing/-ed verbs with final
            consonant undoubling, plural -s), then a NOUN fallback.
itm         containment c of the caption's unique tokens inside the asset
            ref's tokens maps to yes/no logits (ln(1+3c), ln(4-3c)); the
            score is the two-way softmax, i.e. (1+3c)/5.
"""

from __future__ import annotations

import hashlib
import math
import random
from typing import Sequence

import numpy as np

from ..corpus import tokenize
from ..prompts import CAPTION_MARKER, GENERATED_PREFIX, SCENARIO_PHRASES
from .base import (
    CallStats,
    EmbedInput,
    ProviderError,
    SamplingParams,
    TokenAnnotation,
    itm_match_probability,
)

EMBED_DIM = 64

# Word pools shared by the mock generator and the synthetic demo corpus;
# asset refs hide a few pool words so lexical edits can move cosine
# similarity in either direction. Kept small on purpose: substitutions
# must hit an asset's hidden words often enough for offline campaigns to
# see both attack successes and failures.
WORD_POOL: dict[str, tuple[str, ...]] = {
    "NOUN": ("man", "woman", "baby", "dog", "cat", "bed", "chair", "guitar"),
    "ADJ": ("red", "blue", "old", "vintage", "wooden", "tiny"),
    "VERB": ("sitting", "standing", "running", "playing", "holding", "looking"),
    "ADP": ("on", "in", "under", "near", "behind"),
    "NUM": ("two", "three", "four"),
}

_FUNCTION_WORDS = {
    "a": ("DET", "a"), "an": ("DET", "an"), "the": ("DET", "the"),
    "this": ("DET", "this"), "that": ("DET", "that"),
    "is": ("AUX", "be"), "are": ("AUX", "be"), "was": ("AUX", "be"), "were": ("AUX", "be"),
    "and": ("CCONJ", "and"), "or": ("CCONJ", "or"),
    "it": ("PRON", "it"), "he": ("PRON", "he"), "she": ("PRON", "she"), "they": ("PRON", "they"),
    "to": ("PART", "to"),
    "at": ("ADP", "at"), "of": ("ADP", "of"), "with": ("ADP", "with"), "by": ("ADP", "by"),
    "not": ("PART", "not"), "no": ("DET", "no"), "without": ("ADP", "without"),
    "empty": ("ADJ", "empty"),
    "typing": ("VERB", "type"), "riding": ("VERB", "ride"),
}

UPOS_LEXICON: dict[str, tuple[str, str]] = dict(_FUNCTION_WORDS)
for _pos, _words in WORD_POOL.items():
    if _pos == "VERB":
        continue  # -ing pool verbs lemmatize through the suffix rule
    for _w in _words:
        UPOS_LEXICON.setdefault(_w, (_pos, _w))
# Pin the stems the suffix rule would mangle.
UPOS_LEXICON["sitting"] = ("VERB", "sit")


def _digest_int(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def _undouble(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in "aeiou":
        return stem[:-1]
    return stem


def tag_token(token: str) -> tuple[str, str]:
    """(UPOS, lemma) for one lowercase token: lexicon, suffix rules, fallback."""
    hit = UPOS_LEXICON.get(token)
    if hit is not None:
        return hit
    if len(token) > 4 and token.endswith("ing"):
        return "VERB", _undouble(token[:-3])
    if len(token) > 3 and token.endswith("ed"):
        return "VERB", _undouble(token[:-2])
    if len(token) > 3 and token.endswith("s") and not token.endswith("ss"):
        return "NOUN", token[:-1]
    return "NOUN", token


class MockEmbedding:
    dim = EMBED_DIM

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.stats = CallStats()
        self._token_vectors: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_vectors.get(token)
        if vec is None:
            rng = np.random.default_rng(_digest_int("embed", self.seed, token))
            vec = rng.standard_normal(EMBED_DIM)
            vec /= np.linalg.norm(vec)
            self._token_vectors[token] = vec
        return vec

    def embed(self, inputs: Sequence[EmbedInput]) -> np.ndarray:
        self.stats.bump(len(inputs))
        out = np.empty((len(inputs), EMBED_DIM))
        for row, item in enumerate(inputs):
            tokens = tokenize(item.value) or ["<empty>"]
            acc = np.zeros(EMBED_DIM)
            for tok in tokens:
                acc += self._token_vector(tok)
            norm = np.linalg.norm(acc)
            if norm == 0.0:  # cancelling token vectors; measure zero but stay total
                acc = self._token_vector("<degenerate>").copy()
                norm = 1.0
            out[row] = acc / norm
        return out


class MockNli:
    model_count = 3

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.stats = CallStats()

    @staticmethod
    def _containment(premise: str, hypothesis: str) -> float:
        hyp = set(tokenize(hypothesis))
        if not hyp:
            return 0.0
        prem = set(tokenize(premise))
        return len(prem & hyp) / len(hyp)

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[list[float]]:
        self.stats.bump(len(pairs))
        out = []
        for premise, hypothesis in pairs:
            s = self._containment(premise, hypothesis)
            out.append([s] * self.model_count)
        return out


class MockAnnotation:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.stats = CallStats()

    def annotate(self, texts: Sequence[str]) -> list[list[TokenAnnotation]]:
        self.stats.bump(len(texts))
        out = []
        for text in texts:
            out.append([TokenAnnotation(tok, *tag_token(tok)) for tok in tokenize(text)])
        return out


class MockItm:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.stats = CallStats()

    def score(self, asset_ref: str, caption: str) -> float:
        self.stats.bump()
        cap = set(tokenize(caption))
        c = len(set(tokenize(asset_ref)) & cap) / len(cap) if cap else 0.0
        return itm_match_probability(math.log(1.0 + 3.0 * c), math.log(4.0 - 3.0 * c))


# Perturbation kinds and their draw weights under the general prompt.
_GENERAL_MOVES = (
    ("sub1", 0.18), ("sub2", 0.20), ("sub3", 0.14),
    ("insert_noun", 0.10), ("insert_adj", 0.06), ("delete", 0.06),
    ("swap_noun", 0.10), ("identity", 0.04), ("negation", 0.06),
    ("malformed", 0.06),
)

_SCENARIO_MOVES = {
    "replace-object": "sub_noun",
    "replace-attribute": "sub_adj",
    "replace-relation": "sub_rel",
    "replace-count": "sub_num",
    "add-object": "insert_noun",
    "add-attribute": "insert_adj",
    "swap-object": "swap_noun",
    "swap-attribute": "swap_adj",
}


class MockGeneration:
    """Seeded caption perturber standing in for an instruction-tuned LLM.

    Each completion derives its randomness from (provider seed, request
    seed, parsed caption, scenario, completion index), so a larger batch
    for the same request is a superset of a smaller one.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.stats = CallStats()

    def generate(self, prompt: str, n: int, params: SamplingParams) -> list[str]:
        if n < 1:
            raise ProviderError("generation batch size must be >= 1")
        self.stats.bump(n)
        caption = self._extract_caption(prompt)
        scenario = self._detect_scenario(prompt)
        return [self._complete(caption, scenario, params, i) for i in range(n)]

    @staticmethod
    def _extract_caption(prompt: str) -> str:
        if CAPTION_MARKER not in prompt:
            raise ProviderError("mock generator expects a given-caption block in the prompt")
        block = prompt.split(CAPTION_MARKER, 1)[1]
        for line in block.splitlines():
            line = line.strip()
            if line.startswith("- "):
                return line[2:].strip()
        raise ProviderError("mock generator found no caption line in the prompt")

    @staticmethod
    def _detect_scenario(prompt: str) -> str | None:
        for kind, phrase in SCENARIO_PHRASES.items():
            if f'"{phrase}" scenario' in prompt:
                return kind
        return None

    def _complete(self, caption: str, scenario: str | None, params: SamplingParams, index: int) -> str:
        rng = random.Random(_digest_int("gen", self.seed, params.seed, caption, scenario, index))
        tokens = tokenize(caption)
        if scenario is not None and rng.random() < 0.72:
            move = _SCENARIO_MOVES[scenario]
        else:
            names, weights = zip(*_GENERAL_MOVES)
            move = rng.choices(names, weights=weights, k=1)[0]
        return self._apply(move, tokens, rng)

    def _apply(self, move: str, tokens: list[str], rng: random.Random) -> str:
        if move == "malformed":
            return "Here is a new caption that ignores the requested format."
        out = list(tokens)
        if move == "identity":
            pass
        elif move == "negation":
            out.insert(rng.randrange(len(out) + 1), rng.choice(("not", "no", "without", "empty")))
        elif move in ("sub1", "sub2", "sub3"):
            self._substitute(out, int(move[-1]), rng)
        elif move in ("sub_noun", "sub_adj", "sub_rel", "sub_num"):
            classes = {"sub_noun": ("NOUN",), "sub_adj": ("ADJ",),
                       "sub_rel": ("VERB", "ADP"), "sub_num": ("NUM",)}[move]
            self._substitute(out, 1, rng, classes=classes)
        elif move in ("insert_noun", "insert_adj"):
            pos = "NOUN" if move == "insert_noun" else "ADJ"
            out.insert(rng.randrange(len(out) + 1), rng.choice(WORD_POOL[pos]))
        elif move == "delete":
            if len(out) >= 4:
                del out[rng.randrange(len(out))]
            else:
                self._substitute(out, 1, rng)
        elif move in ("swap_noun", "swap_adj"):
            self._swap(out, "NOUN" if move == "swap_noun" else "ADJ", rng)
        else:
            raise AssertionError(f"unknown move {move}")
        return GENERATED_PREFIX + " ".join(out)

    def _substitute(self, tokens: list[str], count: int, rng: random.Random,
                    classes: tuple[str, ...] | None = None) -> None:
        if not tokens:
            tokens.append(rng.choice(WORD_POOL["NOUN"]))
            return
        if classes is None:
            positions = list(range(len(tokens)))
        else:
            positions = [i for i, t in enumerate(tokens) if tag_token(t)[0] in classes]
            if not positions:  # nothing of the requested class; off-target edit
                positions = list(range(len(tokens)))
        rng.shuffle(positions)
        for i in positions[: min(count, len(positions))]:
            pos = tag_token(tokens[i])[0]
            pool = WORD_POOL.get(pos) or WORD_POOL["NOUN"]
            choices = [w for w in pool if w != tokens[i]] or list(WORD_POOL["NOUN"])
            tokens[i] = rng.choice(choices)

    def _swap(self, tokens: list[str], pos: str, rng: random.Random) -> None:
        slots = [i for i, t in enumerate(tokens) if tag_token(t)[0] == pos]
        distinct = {tokens[i] for i in slots}
        if len(distinct) < 2:
            self._substitute(tokens, 2, rng)
            return
        while True:
            a, b = rng.sample(slots, 2)
            if tokens[a] != tokens[b]:
                break
        tokens[a], tokens[b] = tokens[b], tokens[a]
