"""Differentiating-word banks.

Preprocessing that mines, for each (class, part-of-speech) pair, the words
statistically over-represented in that class, and decides which parts of
speech separate the classes at all (one-way MANOVA over word embeddings).
The banks feed the targeted word-swap operator.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from textcf import stats
from textcf.corpus import Corpus, tokenize
from textcf.models import Embedder

__all__ = [
    "PosSelection",
    "WordBank",
    "build_word_banks",
    "load_banks",
    "manova_pillai",
    "overrepresentation_test",
    "pillai_permutation_p",
    "pillai_trace",
    "save_banks",
    "select_differentiating_pos",
]

ALPHA = 0.05
PERMUTATION_SHUFFLES = 1000


@dataclass(frozen=True)
class WordBank:
    """Up to k words over-represented in one class for one POS, most
    significant first."""

    class_id: str
    pos: str
    entries: tuple[tuple[str, float], ...]  # (word, p_value), p ascending

    def words(self) -> list[str]:
        return [w for w, _ in self.entries]


@dataclass(frozen=True)
class PosSelection:
    """POS tags whose per-class embedding clusters differ significantly."""

    differentiating: frozenset[str]
    p_values: dict[str, float] = field(default_factory=dict)


def overrepresentation_test(
    word_count_in_class: int,
    class_token_total: int,
    word_count_overall: int,
    overall_token_total: int,
) -> float:
    """One-sided p-value that a word is over-represented in a class.

    The null puts the word at its pooled corpus rate: with
    X ~ Binomial(class_token_total, word_count_overall / overall_token_total),
    returns P(X >= word_count_in_class).
    """
    if overall_token_total <= 0:
        raise ValueError("overall_token_total must be positive")
    if not 0 <= word_count_in_class <= class_token_total <= overall_token_total:
        raise ValueError("inconsistent counts")
    if word_count_in_class > word_count_overall:
        raise ValueError("class count cannot exceed overall count")
    rate = word_count_overall / overall_token_total
    return stats.binom_tail(word_count_in_class, class_token_total, rate)


def build_word_banks(
    corpus: Corpus,
    pos_selection: PosSelection,
    k: int = 10,
    alpha: float = ALPHA,
) -> list[WordBank]:
    """Mine the top-k over-represented words per (class, differentiating POS).

    Entries are ordered by ascending p-value, ties broken by descending
    in-class count then lexicographically. Empty banks are kept so callers
    see the full (class, POS) grid.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    class_counts: dict[str, Counter] = {label: Counter() for label in corpus.labels}
    word_pos: dict[str, str] = {}
    for text, label in corpus.examples:
        tt = tokenize(text)
        for tok, tag in zip(tt.tokens, tt.pos_tags):
            word = tok.lower()
            class_counts[label][word] += 1
            word_pos.setdefault(word, tag)
    overall = Counter()
    for counter in class_counts.values():
        overall.update(counter)
    overall_total = sum(overall.values())
    banks = []
    for label in corpus.labels:
        counter = class_counts[label]
        class_total = sum(counter.values())
        for pos in sorted(pos_selection.differentiating):
            scored = []
            for word, count in counter.items():
                if word_pos[word] != pos:
                    continue
                p = overrepresentation_test(count, class_total, overall[word], overall_total)
                if p < alpha:
                    scored.append((p, -count, word))
            scored.sort()
            entries = tuple((word, p) for p, _, word in scored[:k])
            banks.append(WordBank(class_id=label, pos=pos, entries=entries))
    return banks


# ---------------------------------------------------------------------------
# MANOVA (Pillai's trace)


def _scatter_matrices(groups: list[np.ndarray]):
    obs = np.vstack(groups)
    grand = obs.mean(axis=0)
    d = obs.shape[1]
    h = np.zeros((d, d))
    e = np.zeros((d, d))
    for g in groups:
        mean = g.mean(axis=0)
        diff = (mean - grand).reshape(-1, 1)
        h += len(g) * (diff @ diff.T)
        centered = g - mean
        e += centered.T @ centered
    return h, e


def pillai_trace(groups: list[np.ndarray]) -> float:
    """Pillai's trace V = tr(H (H+E)^-1); pseudo-inverse on singular totals."""
    h, e = _scatter_matrices(groups)
    total = h + e
    try:
        solved = np.linalg.solve(total, h)
    except np.linalg.LinAlgError:
        solved = np.linalg.pinv(total) @ h
    return float(np.trace(solved))


def _as_groups(groups) -> list[np.ndarray]:
    out = []
    for g in groups:
        arr = np.asarray(g, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        out.append(arr)
    return out


def pillai_permutation_p(
    groups, n_shuffles: int = PERMUTATION_SHUFFLES, seed: int = 0
) -> float:
    """Permutation p-value for Pillai's trace: the fraction of group-label
    shuffles whose trace reaches the observed one."""
    groups = _as_groups(groups)
    observed = pillai_trace(groups)
    pooled = np.vstack(groups)
    sizes = [len(g) for g in groups]
    rng = random.Random(seed)
    idx = list(range(len(pooled)))
    hits = 0
    for _ in range(n_shuffles):
        rng.shuffle(idx)
        start = 0
        shuffled = []
        for size in sizes:
            shuffled.append(pooled[idx[start : start + size]])
            start += size
        if pillai_trace(shuffled) >= observed - 1e-12:
            hits += 1
    return hits / n_shuffles


def manova_pillai(groups, seed: int = 0) -> float:
    """One-way MANOVA p-value via the F approximation of Pillai's trace.

    Falls back to a permutation test when the total scatter matrix is
    singular or the F degrees of freedom are not positive.
    """
    groups = _as_groups(groups)
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    d = groups[0].shape[1]
    if any(g.shape[1] != d for g in groups):
        raise ValueError("all observations must share one dimension")
    n = sum(len(g) for g in groups)
    g_count = len(groups)
    if n <= g_count + d:
        raise ValueError("need more observations than groups + dimension")

    h, e = _scatter_matrices(groups)
    total = h + e
    # rank-deficient totals break the F approximation; permutation instead
    if np.linalg.matrix_rank(total) < d:
        return pillai_permutation_p(groups, seed=seed)
    v = float(np.trace(np.linalg.solve(total, h)))
    s = min(d, g_count - 1)
    v = min(max(v, 0.0), float(s))
    m = (abs(d - g_count + 1) - 1) / 2.0
    n2 = (n - g_count - d - 1) / 2.0
    df1 = s * (2 * m + s + 1)
    df2 = s * (2 * n2 + s + 1)
    if df2 <= 0:
        return pillai_permutation_p(groups, seed=seed)
    if v >= s:  # perfect separation
        return 0.0
    f_stat = (df2 / df1) * (v / s) / (1.0 - v / s)
    return stats.f_sf(f_stat, df1, df2)


def select_differentiating_pos(corpus: Corpus, embedder: Embedder) -> PosSelection:
    """Decide which POS separate the classes.

    For each POS, the per-class groups are the embeddings of the word types
    of that POS seen in that class's texts (deduplicated). POS with too few
    embeddable types for the MANOVA preconditions are skipped.
    """
    per_pos_class: dict[str, dict[str, set[str]]] = {}
    for text, label in corpus.examples:
        tt = tokenize(text)
        for tok, tag in zip(tt.tokens, tt.pos_tags):
            per_pos_class.setdefault(tag, {}).setdefault(label, set()).add(tok.lower())
    p_values: dict[str, float] = {}
    differentiating = set()
    for pos in sorted(per_pos_class):
        groups = []
        for label in corpus.labels:
            words = sorted(per_pos_class[pos].get(label, ()))
            vecs = [embedder.embed_word(w) for w in words]
            vecs = [v for v in vecs if v is not None]
            if vecs:
                groups.append(np.vstack(vecs))
        if len(groups) < 2:
            continue
        d = groups[0].shape[1]
        total = sum(len(g) for g in groups)
        if total < d + len(groups) + 2 or total <= len(groups) + d:
            continue
        p = manova_pillai(groups)
        p_values[pos] = p
        if p < ALPHA:
            differentiating.add(pos)
    return PosSelection(differentiating=frozenset(differentiating), p_values=p_values)


# ---------------------------------------------------------------------------
# Serialization


def save_banks(banks: list[WordBank], path: str) -> None:
    data = {
        f"{b.class_id}/{b.pos}": [{"word": w, "p_value": p} for w, p in b.entries]
        for b in banks
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)


def load_banks(path: str) -> list[WordBank]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    banks = []
    for key in sorted(data):
        class_id, pos = key.split("/", 1)
        entries = tuple((e["word"], e["p_value"]) for e in data[key])
        banks.append(WordBank(class_id=class_id, pos=pos, entries=entries))
    return banks
