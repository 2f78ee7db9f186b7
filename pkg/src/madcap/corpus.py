"""Caption/asset pair corpora: ingestion, normalization, and dataset statistics.

A corpus file is UTF-8 JSON Lines, one record per pair:

    {"id": str, "caption": str, "asset": str,
     "modality": "image"|"video"|"audio", "split": "train"|"test"}

A CSV file with the same column names is accepted as an adapter format.
"""

from __future__ import annotations

import csv
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path

MODALITIES = ("image", "video", "audio")
SPLITS = ("train", "test")


class CorpusError(ValueError):
    """Malformed or inconsistent corpus input."""


def normalize_text(text: str) -> str:
    """Unicode-NFC normalize and collapse whitespace runs to single spaces."""
    return " ".join(unicodedata.normalize("NFC", text).split())


def _strip_outer_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Split text into word tokens.

    NFC-normalized, lowercased, whitespace-split, with surrounding (not
    internal) punctuation stripped and empty tokens dropped. This one
    tokenizer feeds edit distances, caption-length statistics, and
    diversity attribution so their thresholds stay mutually consistent.
    """
    tokens = []
    for raw in unicodedata.normalize("NFC", text).lower().split():
        tok = _strip_outer_punct(raw)
        if tok:
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class DataPair:
    """One ground-truth caption plus a reference to its paired asset.

    `caption` is the normalized form used by all criteria; `raw_caption`
    is echoed in reports. `asset_ref` is an opaque locator handed to
    embedding providers (file path, URL, or precomputed-embedding key).
    """

    id: str
    caption: str
    raw_caption: str
    asset_ref: str
    modality: str
    split: str


@dataclass(frozen=True)
class Corpus:
    name: str
    pairs: tuple[DataPair, ...]
    l_d: float  # mean tokenize(caption) length over pairs

    @classmethod
    def from_pairs(cls, name: str, pairs: list[DataPair] | tuple[DataPair, ...]) -> "Corpus":
        pairs = tuple(pairs)
        if pairs:
            l_d = sum(len(tokenize(p.caption)) for p in pairs) / len(pairs)
        else:
            l_d = 0.0
        return cls(name=name, pairs=pairs, l_d=l_d)

    def for_split(self, split: str) -> "Corpus":
        """Sub-corpus of one split, with l_d recomputed on that split only."""
        if split not in SPLITS:
            raise CorpusError(f"unknown split {split!r}, expected one of {SPLITS}")
        return Corpus.from_pairs(f"{self.name}/{split}", [p for p in self.pairs if p.split == split])

    def __len__(self) -> int:
        return len(self.pairs)


def _build_pair(record: dict, where: str) -> DataPair:
    for field in ("id", "caption", "asset", "modality", "split"):
        if record.get(field) in (None, ""):
            raise CorpusError(f"{where}: missing field {field!r}")
    if record["modality"] not in MODALITIES:
        raise CorpusError(f"{where}: modality {record['modality']!r} not in {MODALITIES}")
    if record["split"] not in SPLITS:
        raise CorpusError(f"{where}: split {record['split']!r} not in {SPLITS}")
    raw = str(record["caption"])
    caption = normalize_text(raw)
    if not caption:
        raise CorpusError(f"{where}: caption empty after normalization")
    return DataPair(
        id=str(record["id"]),
        caption=caption,
        raw_caption=raw,
        asset_ref=str(record["asset"]),
        modality=record["modality"],
        split=record["split"],
    )


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise CorpusError(f"{path}:{lineno}: record is not an object")
            yield lineno, record


def _iter_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, record in enumerate(reader, start=2):  # header is line 1
            yield lineno, record


def ingest(path: str | Path, format_hint: str = "auto") -> Corpus:
    """Load a corpus file, normalize captions, and compute l_d.

    format_hint is "jsonl", "csv", or "auto" (by file extension).
    Duplicate ids and malformed records are hard errors reported with
    their line number.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    fmt = format_hint
    if fmt == "auto":
        fmt = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise CorpusError(f"unknown corpus format {format_hint!r}")

    rows = _iter_csv(path) if fmt == "csv" else _iter_jsonl(path)
    pairs: list[DataPair] = []
    seen: set[str] = set()
    for lineno, record in rows:
        pair = _build_pair(record, where=f"{path}:{lineno}")
        if pair.id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate pair id {pair.id!r}")
        seen.add(pair.id)
        pairs.append(pair)
    return Corpus.from_pairs(path.stem, pairs)


def write_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus back to the JSON Lines interchange format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus.pairs:
            fh.write(
                json.dumps(
                    {
                        "id": p.id,
                        "caption": p.raw_caption,
                        "asset": p.asset_ref,
                        "modality": p.modality,
                        "split": p.split,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
