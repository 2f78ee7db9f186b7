"""Synthetic caption/asset corpora for offline (mock-provider) runs.

Captions come from a few sentence patterns over the mock word pools.
Asset refs are token bags holding most of the caption's content words
plus a couple of hidden pool words, so lexical edits can move the mock
embedding similarity in either direction: some candidate captions beat
the original, most don't, which is the regime the pipeline exercises.
"""

from __future__ import annotations

import hashlib
import random
from pathlib import Path

from .corpus import Corpus, DataPair, write_jsonl
from .providers.mock import WORD_POOL, tag_token


def stable_seed(*parts) -> int:
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


# Mixed lengths on purpose: the distance budget comes from the corpus
# average, so the short captions are the attackable ones.
_PATTERNS = (
    "a {adj} {noun}",
    "a {noun} {verb} {adp} a {noun2}",
    "a {adj} {noun} {verb} {adp} the {adj2} {noun2}",
    "the {noun} is {verb} {adp} the {noun2}",
    "a {noun} and a {noun2} {verb} {adp} the {noun3}",
    "{num} {noun}s {verb} {adp} the {adj} {noun2}",
)

_HIDDEN_SPEC = (("NOUN", 2), ("ADJ", 2))
_VISIBLE_FRACTION = 0.5


def _caption(rng: random.Random) -> str:
    nouns = rng.sample(WORD_POOL["NOUN"], 3)
    adjs = rng.sample(WORD_POOL["ADJ"], 2)
    pattern = rng.choice(_PATTERNS)
    return pattern.format(
        noun=nouns[0], noun2=nouns[1], noun3=nouns[2],
        adj=adjs[0], adj2=adjs[1],
        verb=rng.choice(WORD_POOL["VERB"]),
        adp=rng.choice(WORD_POOL["ADP"]),
        num=rng.choice(WORD_POOL["NUM"]),
    )


def _asset_ref(caption: str, rng: random.Random) -> str:
    tokens = caption.split()
    content = [w for w in tokens if tag_token(w)[0] in ("NOUN", "ADJ", "VERB", "NUM")]
    keep = max(1, round(_VISIBLE_FRACTION * len(content)))
    visible = rng.sample(content, keep)
    hidden = []
    for pos, count in _HIDDEN_SPEC:
        available = [w for w in WORD_POOL[pos] if w not in tokens]
        hidden += rng.sample(available, min(count, len(available)))
    return "scene " + " ".join(visible + hidden)


def build_demo_corpus(n_train: int, n_test: int, seed: int = 0,
                      modality: str = "image", name: str = "demo") -> Corpus:
    pairs = []
    splits = ["train"] * n_train + ["test"] * n_test
    for i, split in enumerate(splits):
        rng = random.Random(stable_seed("demo", seed, i))
        caption = _caption(rng)
        pairs.append(DataPair(
            id=f"pair-{i:04d}",
            caption=caption,
            raw_caption=caption,
            asset_ref=_asset_ref(caption, rng),
            modality=modality,
            split=split,
        ))
    return Corpus.from_pairs(name, pairs)


def write_demo_corpus(path: str | Path, n_train: int, n_test: int, seed: int = 0,
                      modality: str = "image") -> Corpus:
    corpus = build_demo_corpus(n_train, n_test, seed=seed, modality=modality,
                               name=Path(path).stem)
    write_jsonl(corpus, path)
    return corpus
