"""Bridge configuration: one JSON file or MODELBRIDGE_* environment vars."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

ENV_PREFIX = "MODELBRIDGE_"


@dataclass(frozen=True)
class BridgeConfig:
    host: str = "127.0.0.1"
    port: int = 8440
    mock: bool = True
    seed: int = 1
    device: str = "cpu"
    # Live-mode model identifiers. Embedding backends are keyed by input
    # kind ("text", "image", ...); three NLI ids; one annotator; the ITM
    # judge is optional.
    embedding_models: dict = field(default_factory=dict)
    nli_models: tuple = ()
    annotation_model: str | None = None
    itm_model: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "BridgeConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown bridge config fields: {sorted(unknown)}")
        if "nli_models" in data:
            data["nli_models"] = tuple(data["nli_models"])
        return cls(**data)

    @classmethod
    def from_env(cls) -> "BridgeConfig":
        def env(name, default=None):
            return os.environ.get(ENV_PREFIX + name, default)

        nli = env("NLI_MODELS")
        embed = env("EMBED_MODELS")
        return cls(
            host=env("HOST", "127.0.0.1"),
            port=int(env("PORT", "8440")),
            mock=env("MOCK", "1") not in ("0", "false", "False"),
            seed=int(env("SEED", "1")),
            device=env("DEVICE", "cpu"),
            embedding_models=json.loads(embed) if embed else {},
            nli_models=tuple(json.loads(nli)) if nli else (),
            annotation_model=env("ANNOTATION_MODEL"),
            itm_model=env("ITM_MODEL"),
        )
