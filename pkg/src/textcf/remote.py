"""HTTP-backed implementations of the scorer interfaces.

The wire protocol (JSON bodies, UTF-8):

    POST /classify  {"text": str, "label": str}          -> {"proba": float}
    POST /predict   {"text": str}                        -> {"label": str}
    POST /lm_loss   {"text": str}                        -> {"loss": float}
    POST /mask_fill {"tokens": [str], "position": int,
                     "mode": "replace"|"insert",
                     "class": str, "top_n": int}         -> {"suggestions":
                                                             [{"word": str,
                                                               "score": float}]}
    POST /embed     {"text": str}                        -> {"vector": [float]}
    GET  /labels                                         -> {"labels": [str]}

Each interface call issues exactly one request; caching and expensive-call
metering happen in the EC ledger, exactly as for the built-in scorers.
"""

from __future__ import annotations

import numpy as np
import requests

from textcf.models import (
    ClassifierOracle,
    Embedder,
    MaskFillSuggester,
    PlausibilityScorer,
    ScoredSuggestion,
)

__all__ = ["ScorerError", "remote_scorer"]

DEFAULT_TIMEOUT = 60.0


class ScorerError(Exception):
    """A remote scorer failed; fatal for the run that issued the call."""

    def __init__(self, kind: str, endpoint: str, detail: str):
        super().__init__(f"remote {kind} scorer at {endpoint}: {detail}")
        self.kind = kind
        self.endpoint = endpoint


def _request(kind: str, endpoint: str, method: str, path: str, payload=None) -> dict:
    url = endpoint.rstrip("/") + path
    try:
        if method == "GET":
            resp = requests.get(url, timeout=DEFAULT_TIMEOUT)
        else:
            resp = requests.post(url, json=payload, timeout=DEFAULT_TIMEOUT)
    except requests.RequestException as exc:
        raise ScorerError(kind, endpoint, f"transport failure ({exc})") from exc
    if resp.status_code != 200:
        raise ScorerError(kind, endpoint, f"HTTP {resp.status_code}")
    try:
        body = resp.json()
    except ValueError as exc:
        raise ScorerError(kind, endpoint, "response is not JSON") from exc
    if not isinstance(body, dict):
        raise ScorerError(kind, endpoint, "response is not a JSON object")
    return body


def _field(kind: str, endpoint: str, body: dict, name: str, types):
    if name not in body or not isinstance(body[name], types):
        raise ScorerError(kind, endpoint, f"response missing valid {name!r} field")
    return body[name]


class RemoteClassifier(ClassifierOracle):
    def __init__(self, endpoint: str):
        self.endpoint = endpoint
        body = _request("classifier", endpoint, "GET", "/labels")
        labels = _field("classifier", endpoint, body, "labels", list)
        self.labels = tuple(str(lab) for lab in labels)

    def classify_proba(self, text: str, label: str) -> float:
        body = _request(
            "classifier", self.endpoint, "POST", "/classify", {"text": text, "label": label}
        )
        return float(_field("classifier", self.endpoint, body, "proba", (int, float)))

    def predict(self, text: str) -> str:
        body = _request("classifier", self.endpoint, "POST", "/predict", {"text": text})
        return str(_field("classifier", self.endpoint, body, "label", str))


class RemoteLm(PlausibilityScorer):
    def __init__(self, endpoint: str):
        self.endpoint = endpoint

    def lm_loss(self, text: str) -> float:
        body = _request("lm", self.endpoint, "POST", "/lm_loss", {"text": text})
        return float(_field("lm", self.endpoint, body, "loss", (int, float)))


class RemoteSuggester(MaskFillSuggester):
    def __init__(self, endpoint: str, class_id: str):
        self.endpoint = endpoint
        self.class_id = class_id

    def mask_fill(self, tokens, position, mode, top_n) -> list[ScoredSuggestion]:
        payload = {
            "tokens": list(tokens),
            "position": position,
            "mode": mode,
            "class": self.class_id,
            "top_n": top_n,
        }
        body = _request("mask_fill", self.endpoint, "POST", "/mask_fill", payload)
        raw = _field("mask_fill", self.endpoint, body, "suggestions", list)
        out = []
        for item in raw:
            if not isinstance(item, dict) or "word" not in item or "score" not in item:
                raise ScorerError(
                    "mask_fill", self.endpoint, "suggestion entries need word and score"
                )
            out.append(ScoredSuggestion(str(item["word"]), float(item["score"])))
        return out


class RemoteEmbedder(Embedder):
    def __init__(self, endpoint: str):
        self.endpoint = endpoint
        self.dim = 0

    def embed(self, text: str) -> np.ndarray:
        body = _request("embedder", self.endpoint, "POST", "/embed", {"text": text})
        vec = np.array(_field("embedder", self.endpoint, body, "vector", list), dtype=float)
        self.dim = len(vec)
        return vec

    def embed_word(self, word: str) -> np.ndarray | None:
        vec = self.embed(word)
        return vec if np.any(vec) else None


def remote_scorer(endpoint: str, kind: str, class_id: str | None = None):
    """Build the scorer interface of the given kind against an endpoint.

    kind "mask_fill" requires `class_id` (one suggester per class).
    """
    if kind == "classifier":
        return RemoteClassifier(endpoint)
    if kind == "lm":
        return RemoteLm(endpoint)
    if kind == "mask_fill":
        if class_id is None:
            raise ValueError("mask_fill scorer needs a class_id")
        return RemoteSuggester(endpoint, class_id)
    if kind == "embedder":
        return RemoteEmbedder(endpoint)
    raise ValueError(f"unknown scorer kind {kind!r}")
