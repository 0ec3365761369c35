"""Scorer interfaces and their built-in statistical implementations.

Four roles drive the search: a probabilistic classifier (free to call), a
language-model plausibility scorer, a per-class mask-fill suggester (both
metered as expensive calls), and a text embedder (free). The built-ins are
a multinomial naive Bayes classifier, an add-k n-gram language model and a
bigram-product suggester trained per class, so the whole pipeline runs
without any neural dependency; `textcf.remote` provides drop-in HTTP-backed
versions of the same interfaces.
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass

import numpy as np

from textcf.corpus import Corpus, tokenize

__all__ = [
    "BudgetExhausted",
    "ClassifierOracle",
    "CountEmbedder",
    "EcLedger",
    "Embedder",
    "MaskFillSuggester",
    "NaiveBayesClassifier",
    "NgramLanguageModel",
    "PlausibilityScorer",
    "ScoredSuggestion",
    "TrainingError",
    "WordVectorEmbedder",
    "ec_guarded_call",
    "guarded_lm_loss",
    "guarded_mask_fill",
    "load_word_vectors",
    "train_class_suggesters",
    "train_naive_bayes",
    "train_ngram_lm",
]

START = "<s>"
END = "</s>"
UNK = "<unk>"


class TrainingError(Exception):
    pass


class BudgetExhausted(Exception):
    """Raised when an uncached expensive call would exceed the EC budget.

    `partial` may carry whatever partial output the aborted operation had
    accumulated; the search layer discards it.
    """

    def __init__(self, message: str = "expensive-call budget exhausted", partial=None):
        super().__init__(message)
        self.partial = partial


# ---------------------------------------------------------------------------
# Interfaces


class ClassifierOracle:
    """Probability estimator over a fixed label set plus its argmax classifier."""

    labels: tuple[str, ...] = ()

    def classify_proba(self, text: str, label: str) -> float:
        raise NotImplementedError

    def predict(self, text: str) -> str:
        best, best_p = self.labels[0], -1.0
        for label in self.labels:
            p = self.classify_proba(text, label)
            if p > best_p:
                best, best_p = label, p
        return best


class PlausibilityScorer:
    """Exposes lm_loss: mean per-token negative log-likelihood of a text."""

    def lm_loss(self, text: str) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ScoredSuggestion:
    word: str
    score: float


class MaskFillSuggester:
    """Per-class replacement/insertion proposer; `class_id` names the class
    whose corpus the instance was fit on."""

    class_id: str = ""

    def mask_fill(
        self, tokens: tuple[str, ...], position: int, mode: str, top_n: int
    ) -> list[ScoredSuggestion]:
        raise NotImplementedError


class Embedder:
    """Maps texts and single words to a fixed-dimension vector space."""

    dim: int = 0

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def embed_word(self, word: str) -> np.ndarray | None:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Expensive-call ledger

# Only these call kinds consume budget; classifier and embedder are free.
COUNTED_KINDS = frozenset({"lm", "mask_fill"})


class EcLedger:
    """Counts uncached expensive calls against a budget and caches results.

    The increment-and-check is atomic so concurrent search workers sharing a
    ledger stay within budget and never double-count a key.
    """

    def __init__(self, budget: int):
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        self.budget = budget
        self.ec_count = 0
        self._cache: dict[tuple, object] = {}
        self._lock = threading.Lock()

    def cached(self, kind: str, key) -> bool:
        return (kind, key) in self._cache


def ec_guarded_call(ledger: EcLedger, kind: str, key, thunk):
    """Serve `(kind, key)` from the ledger cache, or evaluate `thunk` and
    charge one EC when the kind is expensive. Raises BudgetExhausted instead
    of evaluating a counted miss at the budget ceiling."""
    with ledger._lock:
        hit = ledger._cache.get((kind, key), _MISS)
        if hit is not _MISS:
            return hit
        counted = kind in COUNTED_KINDS
        if counted and ledger.ec_count >= ledger.budget:
            raise BudgetExhausted()
        result = thunk()
        ledger._cache[(kind, key)] = result
        if counted:
            ledger.ec_count += 1
        return result


_MISS = object()


def guarded_lm_loss(ledger: EcLedger, scorer: PlausibilityScorer, text: str) -> float:
    return ec_guarded_call(ledger, "lm", text, lambda: scorer.lm_loss(text))


def guarded_mask_fill(
    ledger: EcLedger,
    suggester: MaskFillSuggester,
    tokens: tuple[str, ...],
    position: int,
    mode: str,
    class_id: str,
    top_n: int,
) -> list[ScoredSuggestion]:
    key = ("\x1f".join(tokens), position, mode, class_id)
    return ec_guarded_call(
        ledger,
        "mask_fill",
        key,
        lambda: suggester.mask_fill(tokens, position, mode, top_n),
    )


# ---------------------------------------------------------------------------
# Built-in classifier


class NaiveBayesClassifier(ClassifierOracle):
    """Multinomial naive Bayes over a bag of lowercased tokens, add-1
    smoothed, vocabulary capped to the most frequent tokens."""

    def __init__(self, labels, vocab, log_priors, log_likelihoods):
        self.labels = tuple(labels)
        self.vocab = vocab  # word -> index
        self.log_priors = log_priors  # label -> float
        self.log_likelihoods = log_likelihoods  # label -> {word: log P(w|c)}

    def _log_posteriors(self, text: str) -> dict[str, float]:
        toks = [t.lower() for t in tokenize(text).tokens]
        scores = {}
        for label in self.labels:
            ll = self.log_likelihoods[label]
            s = self.log_priors[label]
            for tok in toks:
                if tok in self.vocab:
                    s += ll[tok]
            scores[label] = s
        peak = max(scores.values())
        norm = math.log(math.fsum(math.exp(s - peak) for s in scores.values())) + peak
        return {label: s - norm for label, s in scores.items()}

    def classify_proba(self, text: str, label: str) -> float:
        if label not in self.log_priors:
            raise ValueError(f"unknown label {label!r}")
        return math.exp(self._log_posteriors(text)[label])

    def predict(self, text: str) -> str:
        post = self._log_posteriors(text)
        return max(self.labels, key=lambda lab: post[lab])

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "vocab": sorted(self.vocab),
            "log_priors": self.log_priors,
            "log_likelihoods": self.log_likelihoods,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NaiveBayesClassifier":
        vocab = {w: i for i, w in enumerate(data["vocab"])}
        return cls(data["labels"], vocab, data["log_priors"], data["log_likelihoods"])


def train_naive_bayes(corpus: Corpus, vocab_cap: int = 1500) -> NaiveBayesClassifier:
    if not corpus.examples:
        raise TrainingError("cannot train a classifier on an empty corpus")
    counts = Counter()
    per_class: dict[str, Counter] = {label: Counter() for label in corpus.labels}
    class_sizes = Counter()
    for text, label in corpus.examples:
        toks = [t.lower() for t in tokenize(text).tokens]
        counts.update(toks)
        per_class[label].update(toks)
        class_sizes[label] += 1
    if any(class_sizes[label] == 0 for label in corpus.labels):
        raise TrainingError("every class needs at least one training example")
    # ties broken lexicographically so the vocabulary is reproducible
    vocab_words = sorted(counts, key=lambda w: (-counts[w], w))[:vocab_cap]
    vocab = {w: i for i, w in enumerate(sorted(vocab_words))}
    v = len(vocab)
    total = sum(class_sizes.values())
    log_priors = {label: math.log(class_sizes[label] / total) for label in corpus.labels}
    log_likelihoods = {}
    for label in corpus.labels:
        in_vocab = {w: c for w, c in per_class[label].items() if w in vocab}
        class_total = sum(in_vocab.values())
        denom = math.log(class_total + v)
        log_likelihoods[label] = {
            w: math.log(in_vocab.get(w, 0) + 1) - denom for w in vocab
        }
    return NaiveBayesClassifier(corpus.labels, vocab, log_priors, log_likelihoods)


# ---------------------------------------------------------------------------
# Built-in language model


class NgramLanguageModel(PlausibilityScorer):
    """Add-k smoothed n-gram model; loss is the mean per-token negative log
    probability with (order-1) start symbols prepended to every sentence."""

    def __init__(self, order: int, k: float, vocab: set[str], ngrams, contexts):
        self.order = order
        self.k = k
        self.vocab = vocab
        self.ngrams = ngrams  # tuple -> count
        self.contexts = contexts  # tuple -> count
        self._v = len(vocab)

    def _map(self, tok: str) -> str:
        tok = tok.lower()
        return tok if tok in self.vocab else UNK

    def _log_prob(self, context: tuple[str, ...], tok: str) -> float:
        num = self.ngrams.get(context + (tok,), 0) + self.k
        den = self.contexts.get(context, 0) + self.k * self._v
        return math.log(num / den)

    def lm_loss(self, text: str) -> float:
        tt = tokenize(text)
        if not tt.tokens:
            return 0.0
        total = 0.0
        count = 0
        pad = (START,) * (self.order - 1)
        for start, end in tt.sentence_bounds:
            seq = pad + tuple(self._map(t) for t in tt.tokens[start:end])
            for i in range(self.order - 1, len(seq)):
                total += self._log_prob(seq[i - self.order + 1 : i], seq[i])
                count += 1
        return -total / count

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "k": self.k,
            "vocab": sorted(self.vocab),
            "ngrams": {"\x1f".join(key): c for key, c in self.ngrams.items()},
            "contexts": {"\x1f".join(key): c for key, c in self.contexts.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "NgramLanguageModel":
        ngrams = {tuple(key.split("\x1f")): c for key, c in data["ngrams"].items()}
        contexts = {tuple(key.split("\x1f")): c for key, c in data["contexts"].items()}
        return cls(data["order"], data["k"], set(data["vocab"]), ngrams, contexts)


def train_ngram_lm(corpus_or_texts, order: int = 2, k: float = 0.1) -> NgramLanguageModel:
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    texts = (
        [text for text, _ in corpus_or_texts.examples]
        if isinstance(corpus_or_texts, Corpus)
        else list(corpus_or_texts)
    )
    if not texts:
        raise TrainingError("cannot train a language model on an empty corpus")
    vocab: set[str] = {UNK}
    sentences: list[tuple[str, ...]] = []
    for text in texts:
        tt = tokenize(text)
        for start, end in tt.sentence_bounds:
            toks = tuple(t.lower() for t in tt.tokens[start:end])
            vocab.update(toks)
            sentences.append(toks)
    ngrams: Counter = Counter()
    contexts: Counter = Counter()
    pad = (START,) * (order - 1)
    for toks in sentences:
        seq = pad + toks
        for i in range(order - 1, len(seq)):
            ngrams[seq[i - order + 1 : i + 1]] += 1
            contexts[seq[i - order + 1 : i]] += 1
    return NgramLanguageModel(order, k, vocab, dict(ngrams), dict(contexts))


# ---------------------------------------------------------------------------
# Built-in per-class suggester


class BigramSuggester(MaskFillSuggester):
    """Scores every word of one class's vocabulary as a replacement or
    insertion at a position by the product of the add-k bigram probabilities
    linking it to its neighbors."""

    def __init__(self, class_id: str, k: float, words: list[str], forward, totals):
        self.class_id = class_id
        self.k = k
        self.words = words  # sorted candidate vocabulary
        self.forward = forward  # prev -> {next: count}
        self.totals = totals  # context -> total outgoing count
        self._index = {w: i for i, w in enumerate(words)}
        self._v = len(words) + 2  # candidates plus START/END
        # dense columns are built lazily per context token
        self._row_cache: dict[str, np.ndarray] = {}
        self._col_cache: dict[str, np.ndarray] = {}
        self._out_totals = np.array(
            [totals.get(w, 0) for w in words], dtype=np.float64
        )

    def _row(self, prev: str) -> np.ndarray:
        """P(w | prev) over the candidate vocabulary."""
        cached = self._row_cache.get(prev)
        if cached is not None:
            return cached
        counts = np.zeros(len(self.words), dtype=np.float64)
        row = self.forward.get(prev)
        if row:
            for w, c in row.items():
                idx = self._index.get(w)
                if idx is not None:
                    counts[idx] = c
        denom = self.totals.get(prev, 0) + self.k * self._v
        probs = (counts + self.k) / denom
        self._row_cache[prev] = probs
        return probs

    def _col(self, nxt: str) -> np.ndarray:
        """P(nxt | w) over the candidate vocabulary."""
        cached = self._col_cache.get(nxt)
        if cached is not None:
            return cached
        counts = np.zeros(len(self.words), dtype=np.float64)
        for i, w in enumerate(self.words):
            row = self.forward.get(w)
            if row:
                counts[i] = row.get(nxt, 0)
        probs = (counts + self.k) / (self._out_totals + self.k * self._v)
        self._col_cache[nxt] = probs
        return probs

    def mask_fill(
        self, tokens: tuple[str, ...], position: int, mode: str, top_n: int
    ) -> list[ScoredSuggestion]:
        if mode not in ("replace", "insert"):
            raise ValueError(f"unknown mask-fill mode {mode!r}")
        if top_n <= 0 or not self.words:
            return []
        n = len(tokens)
        if mode == "replace":
            if not 0 <= position < n:
                raise IndexError("replace position out of range")
            prev = tokens[position - 1].lower() if position > 0 else START
            nxt = tokens[position + 1].lower() if position + 1 < n else END
        else:
            if not 1 <= position <= n - 1:
                raise IndexError("insert position must name a gap between tokens")
            prev = tokens[position - 1].lower()
            nxt = tokens[position].lower()
        scores = self._row(prev) * self._col(nxt)
        order = sorted(range(len(self.words)), key=lambda i: (-scores[i], self.words[i]))
        return [
            ScoredSuggestion(self.words[i], float(scores[i])) for i in order[:top_n]
        ]

    def to_json(self) -> dict:
        return {
            "class_id": self.class_id,
            "k": self.k,
            "words": self.words,
            "forward": self.forward,
            "totals": self.totals,
        }

    @classmethod
    def from_json(cls, data: dict) -> "BigramSuggester":
        return cls(data["class_id"], data["k"], data["words"], data["forward"], data["totals"])


def train_class_suggesters(
    corpus: Corpus, order: int = 2, k: float = 0.1
) -> dict[str, BigramSuggester]:
    """Fit one suggester per class on that class's texts. `order` is accepted
    for symmetry with train_ngram_lm; scoring is bigram-based."""
    del order
    suggesters = {}
    for label in corpus.labels:
        texts = corpus.texts_of(label)
        if not texts:
            raise TrainingError(f"class {label!r} has no training examples")
        forward: dict[str, dict[str, int]] = {}
        totals: dict[str, int] = {}
        words: set[str] = set()
        for text in texts:
            tt = tokenize(text)
            for start, end in tt.sentence_bounds:
                toks = [t.lower() for t in tt.tokens[start:end]]
                words.update(toks)
                seq = [START] + toks + [END]
                for a, b in zip(seq, seq[1:]):
                    forward.setdefault(a, {})
                    forward[a][b] = forward[a].get(b, 0) + 1
                    totals[a] = totals.get(a, 0) + 1
        suggesters[label] = BigramSuggester(label, k, sorted(words), forward, totals)
    return suggesters


# ---------------------------------------------------------------------------
# Embedders


class WordVectorEmbedder(Embedder):
    """Exact-lookup word vectors; text embedding is the mean over the tokens
    present in the table (zero vector when none are)."""

    def __init__(self, table: dict[str, np.ndarray], dim: int):
        self.table = table
        self.dim = dim

    def embed_word(self, word: str) -> np.ndarray | None:
        return self.table.get(word.lower())

    def embed(self, text: str) -> np.ndarray:
        vecs = [
            self.table[tok]
            for tok in (t.lower() for t in tokenize(text).tokens)
            if tok in self.table
        ]
        if not vecs:
            return np.zeros(self.dim)
        return np.mean(vecs, axis=0)


def load_word_vectors(path: str) -> WordVectorEmbedder:
    """Parse a `word v1 v2 ... vd` text table (GloVe-style)."""
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} vector components, got {len(values)}"
                )
            table[word.lower()] = np.array([float(v) for v in values])
    if dim is None:
        raise ValueError(f"{path}: empty word-vector file")
    return WordVectorEmbedder(table, dim)


class CountEmbedder(Embedder):
    """Corpus-derived fallback embedder: a word's vector is its per-class
    share of occurrences with the redundant last component dropped (shares
    sum to one, which would make every statistic on them singular), so
    class-skewed words separate in embedding space. Used when no external
    word-vector table is configured."""

    def __init__(self, table: dict[str, np.ndarray], dim: int):
        self.table = table
        self.dim = dim

    def embed_word(self, word: str) -> np.ndarray | None:
        return self.table.get(word.lower())

    def embed(self, text: str) -> np.ndarray:
        vecs = [
            self.table[tok]
            for tok in (t.lower() for t in tokenize(text).tokens)
            if tok in self.table
        ]
        if not vecs:
            return np.zeros(self.dim)
        return np.mean(vecs, axis=0)

    def to_json(self) -> dict:
        return {"dim": self.dim, "table": {w: v.tolist() for w, v in self.table.items()}}

    @classmethod
    def from_json(cls, data: dict) -> "CountEmbedder":
        table = {w: np.array(v) for w, v in data["table"].items()}
        return cls(table, data["dim"])


def train_count_embedder(corpus: Corpus) -> CountEmbedder:
    per_class: dict[str, Counter] = {label: Counter() for label in corpus.labels}
    for text, label in corpus.examples:
        per_class[label].update(t.lower() for t in tokenize(text).tokens)
    words = set()
    for counter in per_class.values():
        words.update(counter)
    dim = max(1, len(corpus.labels) - 1)
    table = {}
    for w in words:
        counts = np.array([per_class[label][w] for label in corpus.labels], dtype=np.float64)
        table[w] = (counts / counts.sum())[:dim]
    return CountEmbedder(table, dim)
