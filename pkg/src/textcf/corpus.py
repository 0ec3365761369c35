"""Text corpus handling: dataset loading, tokenization, sentence splitting,
POS tagging, cleaning and class balancing.

Everything here is deterministic and dependency-free so that the rest of the
pipeline (model training, word banks, search) can rely on stable token
sequences.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

__all__ = [
    "POS_TAGS",
    "Corpus",
    "TokenizedText",
    "DatasetError",
    "balance_classes",
    "clean_text",
    "detokenize",
    "load_dataset",
    "load_pos_lexicon",
    "pos_tag",
    "tokenize",
]

# Universal coarse tag set; every tagger plugged into `pos_tag` must map into it.
POS_TAGS = frozenset(
    {
        "noun",
        "verb",
        "adjective",
        "adverb",
        "pronoun",
        "determiner",
        "adposition",
        "conjunction",
        "numeral",
        "particle",
        "punctuation",
        "other",
    }
)

SENTENCE_FINAL = frozenset(".!?")


class DatasetError(Exception):
    """Raised for unreadable, empty or malformed dataset files."""


@dataclass(frozen=True)
class Corpus:
    """A labeled text collection. `labels` keeps first-appearance order."""

    examples: tuple[tuple[str, str], ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        known = set(self.labels)
        for _, label in self.examples:
            if label not in known:
                raise ValueError(f"example label {label!r} not in label set")
        if len(self.labels) < 2:
            raise ValueError("corpus needs at least 2 labels")

    def texts_of(self, label: str) -> list[str]:
        return [text for text, lab in self.examples if lab == label]

    def counts(self) -> dict[str, int]:
        out = {label: 0 for label in self.labels}
        for _, label in self.examples:
            out[label] += 1
        return out


@dataclass(frozen=True)
class TokenizedText:
    """A text plus its token, sentence and POS structure.

    `sentence_bounds` partitions [0, len(tokens)) into contiguous half-open
    ranges; `pos_tags` is aligned with `tokens`.
    """

    raw: str
    tokens: tuple[str, ...]
    sentence_bounds: tuple[tuple[int, int], ...]
    pos_tags: tuple[str, ...]

    @property
    def key(self) -> tuple[str, ...]:
        """Hashable identity used by search visited-sets and dedup."""
        return self.tokens

    def sentence_tokens(self, i: int) -> tuple[str, ...]:
        start, end = self.sentence_bounds[i]
        return self.tokens[start:end]

    def num_sentences(self) -> int:
        return len(self.sentence_bounds)

    def __len__(self) -> int:
        return len(self.tokens)


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "'"


def clean_text(text: str) -> str:
    """Normalize a text: drop '#'/'@', collapse whitespace, strip, and remove
    spaces sitting directly before punctuation ("good ," -> "good,")."""
    text = text.replace("#", "").replace("@", "")
    parts = text.split()
    joined = " ".join(parts)
    out: list[str] = []
    for ch in joined:
        if out and out[-1] == " " and not _is_word_char(ch) and not ch.isspace():
            while out and out[-1] == " ":
                out.pop()
        out.append(ch)
    return "".join(out).strip()


def detokenize(tokens: Iterable[str]) -> str:
    """Inverse of tokenization up to whitespace: space-join, then re-attach
    punctuation to the preceding token (the same rule `clean_text` applies)."""
    out: list[str] = []
    for tok in tokens:
        if out and tok and not _is_word_char(tok[0]):
            out.append(tok)
        else:
            if out:
                out.append(" ")
            out.append(tok)
    return "".join(out)


@lru_cache(maxsize=65536)
def tokenize(text: str) -> TokenizedText:
    """Split a text into word/punctuation tokens with sentence bounds.

    Tokens are maximal runs of letters, digits and apostrophes; any other
    non-space character becomes a single-character token. A sentence ends
    after '.', '!' or '?' when followed by whitespace or end of text.
    """
    tokens: list[str] = []
    breaks: list[int] = []  # token counts at which a sentence closed
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if _is_word_char(ch):
            j = i
            while j < n and _is_word_char(text[j]):
                j += 1
            tokens.append(text[i:j])
            i = j
        else:
            tokens.append(ch)
            if ch in SENTENCE_FINAL and (i + 1 >= n or text[i + 1].isspace()):
                breaks.append(len(tokens))
            i += 1
    bounds: list[tuple[int, int]] = []
    start = 0
    for b in breaks:
        if b > start:
            bounds.append((start, b))
            start = b
    if start < len(tokens):
        bounds.append((start, len(tokens)))
    toks = tuple(tokens)
    return TokenizedText(
        raw=text,
        tokens=toks,
        sentence_bounds=tuple(bounds),
        pos_tags=tuple(pos_tag(toks)),
    )


def retokenize(tokens: Iterable[str]) -> TokenizedText:
    """Build a TokenizedText for an edited token sequence."""
    return tokenize(detokenize(tokens))


_DEFAULT_LEXICON: dict[str, str] | None = None


def load_pos_lexicon(path=None) -> dict[str, str]:
    """Read a `word<TAB>tag` lexicon file; defaults to the bundled table."""
    if path is None:
        src = resources.files("textcf.data").joinpath("pos_lexicon.tsv")
        lines = src.read_text(encoding="utf-8").splitlines()
    else:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    lexicon: dict[str, str] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            word, tag = line.split("\t")
        except ValueError as exc:
            raise DatasetError(f"pos lexicon line {lineno}: expected word<TAB>tag") from exc
        if tag not in POS_TAGS:
            raise DatasetError(f"pos lexicon line {lineno}: unknown tag {tag!r}")
        lexicon[word.lower()] = tag
    return lexicon


def _default_lexicon() -> dict[str, str]:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = load_pos_lexicon()
    return _DEFAULT_LEXICON


def pos_tag(tokens: Iterable[str], lexicon: Mapping[str, str] | None = None) -> list[str]:
    """Tag each token with a coarse POS.

    Punctuation and digit tokens are tagged by rule; everything else is a
    lowercased lexicon lookup with `other` as the out-of-lexicon fallback.
    """
    if lexicon is None:
        lexicon = _default_lexicon()
    tags = []
    for tok in tokens:
        if not any(ch.isalnum() for ch in tok):
            tags.append("punctuation")
        elif tok.isdigit():
            tags.append("numeral")
        else:
            tags.append(lexicon.get(tok.lower(), "other"))
    return tags


def load_dataset(path: str, format: str | None = None) -> Corpus:
    """Load a labeled dataset from CSV (`text,label` header) or JSON lines.

    The format is inferred from the file extension unless given explicitly.
    """
    if format is None:
        format = "csv" if str(path).lower().endswith(".csv") else "jsonl"
    if format not in ("csv", "jsonl"):
        raise DatasetError(f"unknown dataset format {format!r}")

    examples: list[tuple[str, str]] = []
    labels: list[str] = []
    seen: set[str] = set()

    def add(text, label, lineno):
        if not isinstance(text, str) or not isinstance(label, str):
            raise DatasetError(f"{path}:{lineno}: text and label must be strings")
        if label not in seen:
            seen.add(label)
            labels.append(label)
        examples.append((text, label))

    with open(path, encoding="utf-8") as fh:
        if format == "csv":
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DatasetError(f"{path}: empty dataset")
            if "text" not in reader.fieldnames or "label" not in reader.fieldnames:
                raise DatasetError(f"{path}:1: header must contain 'text' and 'label' columns")
            for record in reader:
                lineno = reader.line_num
                if record.get("text") is None or record.get("label") is None:
                    raise DatasetError(f"{path}:{lineno}: missing text or label field")
                add(record["text"], record["label"], lineno)
        else:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
                if not isinstance(record, dict) or "text" not in record or "label" not in record:
                    raise DatasetError(f"{path}:{lineno}: record needs 'text' and 'label' fields")
                add(record["text"], record["label"], lineno)

    if not examples:
        raise DatasetError(f"{path}: empty dataset")
    return Corpus(examples=tuple(examples), labels=tuple(labels))


def balance_classes(corpus: Corpus, seed: int) -> Corpus:
    """Undersample every class to the minority-class count, without
    replacement and reproducibly for a fixed seed."""
    counts = corpus.counts()
    if any(c == 0 for c in counts.values()):
        raise ValueError("every label needs at least one example")
    target = min(counts.values())
    rng = random.Random(seed)
    keep: set[int] = set()
    for label in corpus.labels:
        idxs = [i for i, (_, lab) in enumerate(corpus.examples) if lab == label]
        keep.update(rng.sample(idxs, target))
    kept = tuple(ex for i, ex in enumerate(corpus.examples) if i in keep)
    return Corpus(examples=kept, labels=corpus.labels)
