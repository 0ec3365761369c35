"""Candidate generators and the plausibility filter.

Every operator turns one text into a list of single-edit candidates:
mask-backed replacement and insertion, word removal, targeted swaps from the
differentiating-word banks, and antonym swaps. Punctuation tokens are never
edit targets. The union of operator outputs is deduplicated on the token
sequence at expansion time (see textcf.search).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

from textcf.banks import PosSelection, WordBank
from textcf.corpus import TokenizedText, retokenize
from textcf.models import (
    BudgetExhausted,
    EcLedger,
    MaskFillSuggester,
    PlausibilityScorer,
    ScoredSuggestion,
    guarded_lm_loss,
    guarded_mask_fill,
)

__all__ = [
    "AntonymLexicon",
    "Candidate",
    "Edit",
    "alpha_filter",
    "load_antonyms",
    "op_antonym_swap",
    "op_dwb_swap",
    "op_mask_insert",
    "op_mask_replace",
    "op_word_removal",
    "plausibility_filter",
]

EDIT_KINDS = ("mask_replace", "mask_insert", "remove", "dwb_swap", "antonym_swap")


@dataclass(frozen=True)
class Edit:
    kind: str
    position: int
    new_word: str | None = None


@dataclass(frozen=True)
class Candidate:
    text: TokenizedText
    edit: Edit


class AntonymLexicon:
    """word -> antonym set; no word maps to itself."""

    def __init__(self, table: Mapping[str, Iterable[str]]):
        self.table: dict[str, tuple[str, ...]] = {}
        for word, ants in table.items():
            word = word.lower()
            cleaned = tuple(sorted({a.lower() for a in ants} - {word}))
            if cleaned:
                self.table[word] = cleaned

    def antonyms_of(self, word: str) -> tuple[str, ...]:
        return self.table.get(word.lower(), ())

    def __len__(self) -> int:
        return len(self.table)


def load_antonyms(path: str | None = None) -> AntonymLexicon:
    """Read a `word<TAB>ant1,ant2,...` lexicon; defaults to the bundled one."""
    if path is None:
        src = resources.files("textcf.data").joinpath("antonyms.tsv")
        lines = src.read_text(encoding="utf-8").splitlines()
    else:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    table: dict[str, list[str]] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            word, ants = line.split("\t")
        except ValueError as exc:
            raise ValueError(f"antonym lexicon line {lineno}: expected word<TAB>list") from exc
        table[word] = [a for a in ants.split(",") if a]
    return AntonymLexicon(table)


def alpha_filter(
    suggestions: list[ScoredSuggestion], alpha: float
) -> list[ScoredSuggestion]:
    """Keep the suggestions scoring at least alpha times the maximum score,
    preserving order."""
    if not suggestions:
        return []
    threshold = alpha * max(s.score for s in suggestions)
    return [s for s in suggestions if s.score >= threshold]


def _editable_positions(text: TokenizedText, positions=None) -> list[int]:
    """Non-punctuation token positions, optionally restricted."""
    out = [i for i, tag in enumerate(text.pos_tags) if tag != "punctuation"]
    if positions is not None:
        allowed = set(positions)
        out = [i for i in out if i in allowed]
    return out


def op_mask_replace(
    text: TokenizedText,
    target: str,
    suggester: MaskFillSuggester,
    alpha: float,
    top_n: int,
    ledger: EcLedger,
    positions=None,
) -> list[Candidate]:
    """Replace each word with the suggester's surviving fills for its slot."""
    out = []
    for i in _editable_positions(text, positions):
        suggestions = guarded_mask_fill(
            ledger, suggester, text.tokens, i, "replace", target, top_n
        )
        for sug in alpha_filter(suggestions, alpha):
            if sug.word.lower() == text.tokens[i].lower():
                continue
            toks = text.tokens[:i] + (sug.word,) + text.tokens[i + 1 :]
            out.append(Candidate(retokenize(toks), Edit("mask_replace", i, sug.word)))
    return out


def op_mask_insert(
    text: TokenizedText,
    target: str,
    suggester: MaskFillSuggester,
    alpha: float,
    top_n: int,
    ledger: EcLedger,
    positions=None,
) -> list[Candidate]:
    """Insert a suggested word into each gap between consecutive tokens."""
    n = len(text.tokens)
    if n < 1:
        return []
    gaps = range(1, n)
    if positions is not None:
        allowed = set(positions)
        # an insertion at gap i sits between tokens i-1 and i
        gaps = [i for i in gaps if i - 1 in allowed and i in allowed]
    out = []
    seen: set[tuple[str, ...]] = set()
    for i in gaps:
        suggestions = guarded_mask_fill(
            ledger, suggester, text.tokens, i, "insert", target, top_n
        )
        for sug in alpha_filter(suggestions, alpha):
            toks = text.tokens[:i] + (sug.word,) + text.tokens[i:]
            cand = retokenize(toks)
            if cand.key in seen:
                continue
            seen.add(cand.key)
            out.append(Candidate(cand, Edit("mask_insert", i, sug.word)))
    return out


def op_word_removal(text: TokenizedText, positions=None) -> list[Candidate]:
    """Drop each non-punctuation word in turn."""
    if len(text.tokens) < 2:
        return []
    out = []
    for i in _editable_positions(text, positions):
        toks = text.tokens[:i] + text.tokens[i + 1 :]
        out.append(Candidate(retokenize(toks), Edit("remove", i)))
    return out


def op_dwb_swap(
    text: TokenizedText,
    banks: list[WordBank],
    pos_selection: PosSelection,
    target: str,
    positions=None,
) -> list[Candidate]:
    """Swap words whose POS is differentiating with the target class's bank
    words of that POS."""
    bank_by_pos = {b.pos: b for b in banks if b.class_id == target}
    out = []
    for i in _editable_positions(text, positions):
        tag = text.pos_tags[i]
        if tag not in pos_selection.differentiating:
            continue
        bank = bank_by_pos.get(tag)
        if bank is None:
            continue
        for word in bank.words():
            if word == text.tokens[i].lower():
                continue
            toks = text.tokens[:i] + (word,) + text.tokens[i + 1 :]
            out.append(Candidate(retokenize(toks), Edit("dwb_swap", i, word)))
    return out


def op_antonym_swap(
    text: TokenizedText, lexicon: AntonymLexicon, positions=None
) -> list[Candidate]:
    """Swap each word with its lexicon antonyms."""
    out = []
    for i in _editable_positions(text, positions):
        for ant in lexicon.antonyms_of(text.tokens[i]):
            toks = text.tokens[:i] + (ant,) + text.tokens[i + 1 :]
            out.append(Candidate(retokenize(toks), Edit("antonym_swap", i, ant)))
    return out


def plausibility_filter(
    candidates: list[Candidate],
    original_loss: float,
    scorer: PlausibilityScorer,
    gamma: float,
    ledger: EcLedger,
) -> list[Candidate]:
    """Keep candidates whose LM loss is at most gamma times the reference
    loss. Each loss goes through the EC-guarded cache; on budget exhaustion
    the partial result rides on the exception."""
    if original_loss <= 0:
        raise ValueError("reference loss must be positive")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    kept: list[Candidate] = []
    for cand in candidates:
        try:
            loss = guarded_lm_loss(ledger, scorer, cand.text.raw)
        except BudgetExhausted as exc:
            exc.partial = kept
            raise
        if loss / original_loss <= gamma:
            kept.append(cand)
    return kept
