"""Live model backends, loaded lazily per role.

Everything here is optional at runtime: imports and weight loading happen
on first use, and a role whose model cannot be loaded surfaces as 503 at
the endpoint rather than failing service startup. Mock mode never touches
this module.
"""

from __future__ import annotations

import logging
import threading

log = logging.getLogger(__name__)


class ModelUnavailable(RuntimeError):
    """The requested role has no loadable model in this configuration."""


class LiveBackends:
    def __init__(self, config):
        self.config = config
        # one inference at a time; model handles are not thread-safe
        self.lock = threading.Lock()
        self._text_encoders = {}
        self._image_encoder = None
        self._nli_pipelines = None
        self._annotator = None
        self._itm = None
        self._itm_token_ids = None
        self.loaded: dict[str, list[str]] = {"embedding": [], "nli": [], "annotation": [], "itm": []}

    # -- embedding -----------------------------------------------------

    def _load_text_encoder(self, model_id: str):
        if model_id not in self._text_encoders:
            try:
                from sentence_transformers import SentenceTransformer
            except ImportError as exc:
                raise ModelUnavailable("sentence-transformers is not installed") from exc
            log.info("loading text encoder %s", model_id)
            self._text_encoders[model_id] = SentenceTransformer(model_id, device=self.config.device)
            self.loaded["embedding"].append(f"text:{model_id}")
        return self._text_encoders[model_id]

    def _load_image_encoder(self, model_id: str):
        if self._image_encoder is None:
            try:
                from transformers import CLIPModel, CLIPProcessor
            except ImportError as exc:
                raise ModelUnavailable("transformers is not installed") from exc
            log.info("loading image encoder %s", model_id)
            model = CLIPModel.from_pretrained(model_id).to(self.config.device)
            processor = CLIPProcessor.from_pretrained(model_id)
            self._image_encoder = (model, processor)
            self.loaded["embedding"].append(f"image:{model_id}")
        return self._image_encoder

    def embed_one(self, kind: str, value: str):
        with self.lock:
            return self._embed_one(kind, value)

    def _embed_one(self, kind: str, value: str):
        import numpy as np

        models = self.config.embedding_models
        if kind == "text":
            model_id = models.get("text")
            if not model_id:
                raise ModelUnavailable("no text embedding model configured")
            vec = self._load_text_encoder(model_id).encode([value], normalize_embeddings=True)[0]
            return np.asarray(vec, dtype=float)
        if kind == "image":
            model_id = models.get("image")
            if not model_id:
                raise ModelUnavailable("no image embedding model configured")
            import torch
            from PIL import Image

            model, processor = self._load_image_encoder(model_id)
            with torch.no_grad():
                inputs = processor(images=Image.open(value), return_tensors="pt").to(self.config.device)
                feats = model.get_image_features(**inputs)[0]
            vec = feats.cpu().numpy().astype(float)
            return vec / np.linalg.norm(vec)
        raise ModelUnavailable(f"no live embedding backend for kind {kind!r}")

    # -- nli -------------------------------------------------------------

    def _load_nli(self):
        if self._nli_pipelines is None:
            if not self.config.nli_models:
                raise ModelUnavailable("no NLI models configured")
            try:
                from transformers import pipeline
            except ImportError as exc:
                raise ModelUnavailable("transformers is not installed") from exc
            pipes = []
            for model_id in self.config.nli_models:
                log.info("loading NLI model %s", model_id)
                pipes.append(pipeline("text-classification", model=model_id,
                                      top_k=None, device=self.config.device))
                self.loaded["nli"].append(model_id)
            self._nli_pipelines = pipes
        return self._nli_pipelines

    def nli_scores(self, premise: str, hypothesis: str) -> list[float]:
        with self.lock:
            return self._nli_scores(premise, hypothesis)

    def _nli_scores(self, premise: str, hypothesis: str) -> list[float]:
        scores = []
        for pipe in self._load_nli():
            rows = pipe({"text": premise, "text_pair": hypothesis})
            entail = next((r["score"] for r in rows if "entail" in r["label"].lower()
                           and "not" not in r["label"].lower()), None)
            if entail is None:
                raise ModelUnavailable(f"model {pipe.model.name_or_path} exposes no entailment label")
            scores.append(float(entail))
        return scores

    # -- annotation -------------------------------------------------------

    def _load_annotator(self):
        if self._annotator is None:
            if not self.config.annotation_model:
                raise ModelUnavailable("no annotation model configured")
            try:
                import spacy
            except ImportError as exc:
                raise ModelUnavailable("spacy is not installed") from exc
            log.info("loading annotator %s", self.config.annotation_model)
            self._annotator = spacy.load(self.config.annotation_model)
            self.loaded["annotation"].append(self.config.annotation_model)
        return self._annotator

    def annotate_one(self, text: str) -> list[dict]:
        with self.lock:
            return self._annotate_one(text)

    def _annotate_one(self, text: str) -> list[dict]:
        nlp = self._load_annotator()
        return [{"text": tok.text.lower(), "pos": tok.pos_, "lemma": tok.lemma_.lower()}
                for tok in nlp(text) if not tok.is_space]

    # -- itm ---------------------------------------------------------------

    def _yes_no_token_ids(self):
        if self._itm_token_ids is None:
            processor = self._itm[1]
            tokenizer = getattr(processor, "tokenizer", processor)
            yes = tokenizer.encode("Yes", add_special_tokens=False)
            no = tokenizer.encode("No", add_special_tokens=False)
            self._itm_token_ids = (yes[0], no[0])
        return self._itm_token_ids

    def _load_itm(self):
        if self._itm is None:
            if not self.config.itm_model:
                raise ModelUnavailable("no ITM judge configured")
            try:
                from transformers import AutoProcessor, LlavaForConditionalGeneration
            except ImportError as exc:
                raise ModelUnavailable("transformers is not installed") from exc
            log.info("loading ITM judge %s", self.config.itm_model)
            model = LlavaForConditionalGeneration.from_pretrained(self.config.itm_model)
            model = model.to(self.config.device)
            processor = AutoProcessor.from_pretrained(self.config.itm_model)
            self._itm = (model, processor)
            self.loaded["itm"].append(self.config.itm_model)
        return self._itm

    def itm_score(self, asset: str, caption: str) -> float:
        with self.lock:
            return self._itm_score(asset, caption)

    def _itm_score(self, asset: str, caption: str) -> float:
        import math

        import torch
        from PIL import Image

        model, processor = self._load_itm()
        prompt = (f"USER: <image>\nDoes this image match the following caption: "
                  f"{caption}? Answer Yes or No directly. ASSISTANT:")
        inputs = processor(images=Image.open(asset), text=prompt, return_tensors="pt")
        with torch.no_grad():
            logits = model(**inputs.to(self.config.device)).logits[0, -1]
        yes_id, no_id = self._yes_no_token_ids()
        yes, no = float(logits[yes_id]), float(logits[no_id])
        m = max(yes, no)
        ey, en = math.exp(yes - m), math.exp(no - m)
        return ey / (ey + en)
