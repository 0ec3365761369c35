"""Model-backed implementations of the five scorer operations."""

from __future__ import annotations

import torch
from transformers import (
    DistilBertForMaskedLM,
    DistilBertForSequenceClassification,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

from textcf_service.config import ServiceConfig


class ScorerBackend:
    """Loads the configured checkpoints once and answers scoring calls.

    Everything runs under torch.no_grad over read-only weights, so the
    backend is safe for concurrent request handling.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.labels = config.labels
        self.tokenizer = PreTrainedTokenizerFast.from_pretrained(
            config.resolved_tokenizer_path()
        )
        self.classifier = DistilBertForSequenceClassification.from_pretrained(
            config.classifier_path
        ).eval()
        self.lm = GPT2LMHeadModel.from_pretrained(config.lm_path).eval()
        self.mlms = {
            label: DistilBertForMaskedLM.from_pretrained(path).eval()
            for label, path in config.mlm_paths.items()
        }
        self._special_ids = set(self.tokenizer.all_special_ids)

    def _encode(self, text: str):
        return self.tokenizer(
            text,
            return_tensors="pt",
            truncation=True,
            max_length=self.tokenizer.model_max_length,
        )

    @torch.no_grad()
    def class_probabilities(self, text: str) -> dict[str, float]:
        logits = self.classifier(**self._encode(text)).logits[0]
        probs = torch.softmax(logits, dim=-1)
        return {label: float(probs[i]) for i, label in enumerate(self.labels)}

    def classify_proba(self, text: str, label: str) -> float:
        if label not in self.labels:
            raise KeyError(label)
        return self.class_probabilities(text)[label]

    def predict(self, text: str) -> str:
        probs = self.class_probabilities(text)
        return max(self.labels, key=lambda label: probs[label])

    @torch.no_grad()
    def lm_loss(self, text: str) -> float:
        enc = self._encode(text)
        if enc.input_ids.shape[1] < 2:
            return 0.0
        loss = self.lm(**enc, labels=enc.input_ids).loss
        return float(loss)

    @torch.no_grad()
    def mask_fill(
        self, tokens: list[str], position: int, mode: str, class_id: str, top_n: int
    ) -> list[dict]:
        if class_id not in self.mlms:
            raise KeyError(class_id)
        if mode not in ("replace", "insert"):
            raise ValueError(f"unknown mode {mode!r}")
        seq = list(tokens)
        if mode == "replace":
            if not 0 <= position < len(seq):
                raise IndexError("replace position out of range")
            seq[position] = self.tokenizer.mask_token
        else:
            if not 1 <= position <= len(seq) - 1:
                raise IndexError("insert position must name a gap between tokens")
            seq.insert(position, self.tokenizer.mask_token)
        enc = self._encode(" ".join(seq))
        mask_positions = (
            (enc.input_ids[0] == self.tokenizer.mask_token_id).nonzero().flatten()
        )
        if len(mask_positions) == 0:
            return []
        logits = self.mlms[class_id](**enc).logits[0, int(mask_positions[0])]
        probs = torch.softmax(logits, dim=-1)
        ranked = torch.argsort(probs, descending=True)
        out = []
        for idx in ranked.tolist():
            if idx in self._special_ids:
                continue
            out.append(
                {
                    "word": self.tokenizer.convert_ids_to_tokens(idx),
                    "score": float(probs[idx]),
                }
            )
            if len(out) >= top_n:
                break
        return out

    @torch.no_grad()
    def embed(self, text: str) -> list[float]:
        enc = self._encode(text)
        hidden = self.lm.transformer(**enc).last_hidden_state[0]
        return hidden.mean(dim=0).tolist()
