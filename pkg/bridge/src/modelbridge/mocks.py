"""Deterministic mock backends, byte-compatible with the core toolkit.

These reimplement the documented mock constructions (the bridge does not
import the core package); the shared golden fixtures under
``fixtures/mock_contract/`` pin byte equality of the wire responses:

tokenize    NFC, lowercase, whitespace split, surrounding punctuation
            stripped, empty tokens dropped.
embedding   64-dim L2-normalized sum of per-token unit vectors; each
            token's vector is a standard-normal draw seeded by
            blake2b("embed", seed, token).
nli         three agreeing judges scoring |tokens(premise) &
            tokens(hypothesis)| / |tokens(hypothesis)| over unique tokens.
annotation  lexicon, then -ing/-ed/-s suffix rules with final-consonant
            undoubling, then a NOUN fallback.
itm         caption-containment c maps to logits (ln(1+3c), ln(4-3c));
            the score is the two-way softmax.
"""

from __future__ import annotations

import hashlib
import math
import unicodedata

import numpy as np

EMBED_DIM = 64

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
UPOS_LEXICON["sitting"] = ("VERB", "sit")


def _strip_outer_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    tokens = []
    for raw in unicodedata.normalize("NFC", text).lower().split():
        tok = _strip_outer_punct(raw)
        if tok:
            tokens.append(tok)
    return tokens


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


class MockBackends:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self._token_vectors: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_vectors.get(token)
        if vec is None:
            rng = np.random.default_rng(_digest_int("embed", self.seed, token))
            vec = rng.standard_normal(EMBED_DIM)
            vec /= np.linalg.norm(vec)
            self._token_vectors[token] = vec
        return vec

    def embed_one(self, value: str) -> np.ndarray:
        tokens = tokenize(value) or ["<empty>"]
        acc = np.zeros(EMBED_DIM)
        for tok in tokens:
            acc += self._token_vector(tok)
        norm = np.linalg.norm(acc)
        if norm == 0.0:
            acc = self._token_vector("<degenerate>").copy()
            norm = 1.0
        return acc / norm

    def nli_scores(self, premise: str, hypothesis: str) -> list[float]:
        hyp = set(tokenize(hypothesis))
        score = len(set(tokenize(premise)) & hyp) / len(hyp) if hyp else 0.0
        return [score, score, score]

    def annotate_one(self, text: str) -> list[dict]:
        out = []
        for tok in tokenize(text):
            pos, lemma = tag_token(tok)
            out.append({"text": tok, "pos": pos, "lemma": lemma})
        return out

    def itm_score(self, asset: str, caption: str) -> float:
        cap = set(tokenize(caption))
        c = len(set(tokenize(asset)) & cap) / len(cap) if cap else 0.0
        yes, no = math.log(1.0 + 3.0 * c), math.log(4.0 - 3.0 * c)
        m = max(yes, no)
        ey, en = math.exp(yes - m), math.exp(no - m)
        return ey / (ey + en)
