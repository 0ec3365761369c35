"""The search engine: a weighted best-first iteration over text states,
wrapped in an anytime outer loop that halves the heuristic weight each
round and keeps the best counterfactual found so far.

States are texts; the cost of a state is its distance to the original text
(not a path cost), and the heuristic is the normalized confidence shortfall
of the target class, which is not admissible. Each inner iteration therefore
just tries to reach *a* goal quickly; solution quality improves across
iterations as the heuristic weight shrinks.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
import time
from dataclasses import dataclass, field

from textcf import operators
from textcf.banks import PosSelection, WordBank
from textcf.corpus import Corpus, TokenizedText, clean_text, detokenize, tokenize
from textcf.distance import DistanceFn
from textcf.models import (
    BudgetExhausted,
    ClassifierOracle,
    EcLedger,
    MaskFillSuggester,
    PlausibilityScorer,
    guarded_lm_loss,
)
from textcf.operators import AntonymLexicon, Candidate, Edit

__all__ = [
    "ALL_OPERATORS",
    "AstarOutcome",
    "CounterfactualResult",
    "SearchNode",
    "SearchProblem",
    "anytime_search",
    "default_counterfactual",
    "focused_search",
    "heuristic",
    "is_goal",
    "sentence_importance",
    "weighted_astar",
]

ALL_OPERATORS = frozenset(
    {"mask_replace", "mask_insert", "remove", "dwb_swap", "antonym_swap"}
)

# Expansion order: the free operators first, so that targeted swaps are
# plausibility-checked (and goal-tested) before budget goes to mask calls'
# broader candidate pool.
_OPERATOR_ORDER = ("remove", "dwb_swap", "antonym_swap", "mask_replace", "mask_insert")


@dataclass
class SearchProblem:
    """Everything one counterfactual search needs."""

    x: TokenizedText
    target: str
    tau: float
    distance: DistanceFn
    classifier: ClassifierOracle
    suggesters: dict[str, MaskFillSuggester]
    plausibility: PlausibilityScorer
    banks: list[WordBank]
    pos_selection: PosSelection
    antonyms: AntonymLexicon
    ledger: EcLedger
    enabled_operators: frozenset[str] = ALL_OPERATORS
    alpha: float = 0.5
    gamma: float = 1.5
    top_n: int = 10

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        unknown = self.enabled_operators - ALL_OPERATORS
        if unknown:
            raise ValueError(f"unknown operators: {sorted(unknown)}")


@dataclass
class SearchNode:
    text: TokenizedText
    g: float
    h: float
    f: float
    parent: "SearchNode | None" = None
    edit: Edit | None = None

    def edit_trace(self) -> list[Edit]:
        trace = []
        node = self
        while node is not None and node.edit is not None:
            trace.append(node.edit)
            node = node.parent
        trace.reverse()
        return trace


@dataclass
class CounterfactualResult:
    """Outcome of one explanation run. `source` is "search", "default" or
    "none"; with "none" no valid counterfactual was found and the remaining
    fields are placeholders."""

    original: str
    counterfactual: str | None
    source: str
    distance: float
    target_proba: float
    plausibility_ratio: float | None
    ec_used: int
    w_h_at_solution: float | None
    edit_trace: list[Edit] = field(default_factory=list)
    # best-so-far distance at each expensive-call count where it improved
    timeline: list[tuple[int, float]] = field(default_factory=list)

    def found(self) -> bool:
        return self.source != "none"


@dataclass
class AstarOutcome:
    """One weighted best-first iteration's result: a goal node when one was
    generated, plus why the iteration stopped otherwise."""

    goal: SearchNode | None = None
    exhausted_budget: bool = False
    exhausted_open: bool = False
    interrupted: bool = False
    hit_node_cap: bool = False
    best_h_node: SearchNode | None = None
    expanded: int = 0


def heuristic(text: TokenizedText, target: str, tau: float, classifier) -> float:
    """Normalized confidence shortfall: max(0, (tau - sigma) / tau).

    Zero exactly when the target confidence already reaches tau; classifier
    calls are free, so the heuristic never consumes budget.
    """
    sigma = classifier.classify_proba(text.raw, target)
    return max(0.0, (tau - sigma) / tau)


def is_goal(text: TokenizedText, problem: SearchProblem) -> bool:
    """A state is a goal when the classifier picks the target class and its
    confidence strictly exceeds tau."""
    proba = problem.classifier.classify_proba(text.raw, problem.target)
    if proba <= problem.tau:
        return False
    return problem.classifier.predict(text.raw) == problem.target


def _expand(problem: SearchProblem, text: TokenizedText, positions=None) -> list[Candidate]:
    """Union of the enabled operators' candidates, deduplicated on the token
    sequence (first occurrence keeps its edit provenance)."""
    ops = problem.enabled_operators
    suggester = problem.suggesters.get(problem.target)
    batches: list[list[Candidate]] = []
    for name in _OPERATOR_ORDER:
        if name not in ops:
            continue
        if name == "remove":
            batches.append(operators.op_word_removal(text, positions))
        elif name == "dwb_swap":
            batches.append(
                operators.op_dwb_swap(
                    text, problem.banks, problem.pos_selection, problem.target, positions
                )
            )
        elif name == "antonym_swap":
            batches.append(operators.op_antonym_swap(text, problem.antonyms, positions))
        elif name == "mask_replace" and suggester is not None:
            batches.append(
                operators.op_mask_replace(
                    text, problem.target, suggester, problem.alpha, problem.top_n,
                    problem.ledger, positions,
                )
            )
        elif name == "mask_insert" and suggester is not None:
            batches.append(
                operators.op_mask_insert(
                    text, problem.target, suggester, problem.alpha, problem.top_n,
                    problem.ledger, positions,
                )
            )
    seen: set[tuple[str, ...]] = {text.key}
    union: list[Candidate] = []
    for batch in batches:
        for cand in batch:
            if cand.text.key in seen:
                continue
            seen.add(cand.text.key)
            union.append(cand)
    return union


def weighted_astar(
    problem: SearchProblem,
    w_h: float,
    iteration_node_cap: int | None = None,
    root: TokenizedText | None = None,
    sentence_index: int | None = None,
    interrupt=None,
    deadline: float | None = None,
) -> AstarOutcome:
    """One best-first iteration with f = (1-w_h)*g + w_h*h.

    Expansion pops the lowest-f node (ties: lower g, then FIFO), generates
    the operator union, filters it for plausibility, and goal-tests each
    surviving child as it appears; the first goal child ends the iteration.
    When `sentence_index` is given, edits are restricted to that sentence of
    each expanded state. Returns an absent goal on open-list exhaustion,
    node cap, interruption or budget exhaustion.
    """
    if not 0.0 <= w_h <= 1.0:
        raise ValueError("w_h must be in [0, 1]")
    start_text = problem.x if root is None else root

    def make_node(text, parent=None, edit=None):
        g = problem.distance.dist(problem.x, text)
        h = heuristic(text, problem.target, problem.tau, problem.classifier)
        return SearchNode(text, g, h, (1.0 - w_h) * g + w_h * h, parent, edit)

    root_node = make_node(start_text)
    if is_goal(start_text, problem):
        return AstarOutcome(goal=root_node)

    counter = itertools.count()
    open_list: list[tuple[float, float, int, SearchNode]] = []
    heapq.heappush(open_list, (root_node.f, root_node.g, next(counter), root_node))
    enqueued: set[tuple[str, ...]] = {root_node.text.key}
    expanded_keys: set[tuple[str, ...]] = set()
    best_h: SearchNode | None = None
    expanded = 0

    def note(node: SearchNode):
        nonlocal best_h
        if best_h is None or node.h < best_h.h:
            best_h = node

    note(root_node)

    while open_list:
        if interrupt is not None and interrupt():
            return AstarOutcome(interrupted=True, best_h_node=best_h, expanded=expanded)
        if deadline is not None and time.monotonic() >= deadline:
            return AstarOutcome(interrupted=True, best_h_node=best_h, expanded=expanded)
        _, _, _, node = heapq.heappop(open_list)
        if node.text.key in expanded_keys:
            continue
        expanded_keys.add(node.text.key)
        expanded += 1

        positions = None
        if sentence_index is not None:
            if sentence_index >= node.text.num_sentences():
                continue
            s, e = node.text.sentence_bounds[sentence_index]
            positions = range(s, e)

        try:
            candidates = _expand(problem, node.text, positions)
            reference = guarded_lm_loss(
                problem.ledger, problem.plausibility, start_text.raw
            )
            for cand in candidates:
                if cand.text.key in expanded_keys or cand.text.key in enqueued:
                    continue
                loss = guarded_lm_loss(problem.ledger, problem.plausibility, cand.text.raw)
                if loss / reference > problem.gamma:
                    continue
                child = make_node(cand.text, parent=node, edit=cand.edit)
                note(child)
                if is_goal(child.text, problem):
                    return AstarOutcome(
                        goal=child, best_h_node=best_h, expanded=expanded
                    )
                enqueued.add(child.text.key)
                heapq.heappush(open_list, (child.f, child.g, next(counter), child))
        except BudgetExhausted:
            return AstarOutcome(
                exhausted_budget=True, best_h_node=best_h, expanded=expanded
            )

        if iteration_node_cap is not None and expanded >= iteration_node_cap:
            return AstarOutcome(
                hit_node_cap=True, best_h_node=best_h, expanded=expanded
            )

    return AstarOutcome(exhausted_open=True, best_h_node=best_h, expanded=expanded)


def sentence_importance(
    text: TokenizedText, i: int, target: str, classifier
) -> float:
    """Confidence gained in the target class when sentence i is dropped."""
    if text.num_sentences() < 2:
        raise ValueError("sentence importance needs at least 2 sentences")
    start, end = text.sentence_bounds[i]
    remaining = text.tokens[:start] + text.tokens[end:]
    reduced = tokenize(detokenize(remaining))
    return classifier.classify_proba(reduced.raw, target) - classifier.classify_proba(
        text.raw, target
    )


def default_counterfactual(
    corpus: Corpus,
    problem: SearchProblem,
    sample_size: int | None = None,
    seed: int = 0,
) -> CounterfactualResult | None:
    """The fast baseline: the goal-satisfying training text nearest to x.

    Scans the corpus (or a seeded uniform sample of it); classifier calls are
    free so this consumes no budget. Returns None when nothing qualifies.
    """
    texts = [text for text, _ in corpus.examples]
    if sample_size is not None and sample_size < len(texts):
        texts = random.Random(seed).sample(texts, sample_size)
    best_text = None
    best_dist = math.inf
    for text in texts:
        tt = tokenize(text)
        if not is_goal(tt, problem):
            continue
        d = problem.distance.dist(problem.x, tt)
        if d < best_dist:
            best_dist = d
            best_text = tt
    if best_text is None:
        return None
    return CounterfactualResult(
        original=clean_text(problem.x.raw),
        counterfactual=clean_text(best_text.raw),
        source="default",
        distance=best_dist,
        target_proba=problem.classifier.classify_proba(best_text.raw, problem.target),
        plausibility_ratio=None,
        ec_used=problem.ledger.ec_count,
        w_h_at_solution=None,
    )


def _no_result(problem: SearchProblem) -> CounterfactualResult:
    return CounterfactualResult(
        original=clean_text(problem.x.raw),
        counterfactual=None,
        source="none",
        distance=math.inf,
        target_proba=0.0,
        plausibility_ratio=None,
        ec_used=problem.ledger.ec_count,
        w_h_at_solution=None,
    )


def _goal_result(
    problem: SearchProblem, goal: SearchNode, w_h: float
) -> CounterfactualResult:
    """Package a goal node; both losses are cached by now so the ratio is
    free to compute."""
    ratio = None
    try:
        original_loss = guarded_lm_loss(problem.ledger, problem.plausibility, problem.x.raw)
        goal_loss = guarded_lm_loss(problem.ledger, problem.plausibility, goal.text.raw)
        ratio = goal_loss / original_loss
    except BudgetExhausted:  # pragma: no cover - both entries already cached
        pass
    return CounterfactualResult(
        original=clean_text(problem.x.raw),
        counterfactual=clean_text(goal.text.raw),
        source="search",
        distance=goal.g,
        target_proba=problem.classifier.classify_proba(goal.text.raw, problem.target),
        plausibility_ratio=ratio,
        ec_used=problem.ledger.ec_count,
        w_h_at_solution=w_h,
        edit_trace=goal.edit_trace(),
    )


class _BestTracker:
    """Keeps the incumbent result and its improvement timeline."""

    def __init__(self, problem: SearchProblem, initial: CounterfactualResult | None):
        self.problem = problem
        self.best = initial if initial is not None else _no_result(problem)
        self.timeline: list[tuple[int, float]] = [
            (problem.ledger.ec_count, self.best.distance)
        ]

    def offer(self, result: CounterfactualResult) -> bool:
        if result.distance < self.best.distance:
            self.best = result
            self.timeline.append((self.problem.ledger.ec_count, result.distance))
            return True
        return False

    def finish(self) -> CounterfactualResult:
        self.best.ec_used = self.problem.ledger.ec_count
        self.best.timeline = self.timeline
        return self.best


def anytime_search(
    problem: SearchProblem,
    corpus: Corpus | None,
    sample_size: int | None = None,
    seed: int = 0,
    iteration_node_cap: int | None = None,
    interrupt=None,
    deadline: float | None = None,
) -> CounterfactualResult:
    """The anytime outer loop: seed the incumbent with the default
    counterfactual, then run weighted best-first iterations with
    w_h = 1, 1/2, 1/4, ... sharing all model caches, keeping the closest
    goal found. Stops on budget exhaustion, interruption, or when a further
    iteration provably cannot improve (open list exhausted, or a whole
    iteration ran from cache without improving)."""
    default = (
        default_counterfactual(corpus, problem, sample_size, seed)
        if corpus is not None
        else None
    )
    tracker = _BestTracker(problem, default)
    w_h = 1.0
    while True:
        if interrupt is not None and interrupt():
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        ec_before = problem.ledger.ec_count
        outcome = weighted_astar(
            problem,
            w_h,
            iteration_node_cap=iteration_node_cap,
            interrupt=interrupt,
            deadline=deadline,
        )
        improved = False
        if outcome.goal is not None:
            improved = tracker.offer(_goal_result(problem, outcome.goal, w_h))
        if outcome.exhausted_budget or outcome.interrupted:
            break
        if outcome.exhausted_open and outcome.goal is None:
            # the whole reachable space was generated and goal-tested
            break
        if problem.ledger.ec_count == ec_before and not improved:
            # ran entirely from cache without gaining anything; later
            # iterations would only reorder the same expansions
            break
        w_h /= 2.0
    return tracker.finish()


def focused_search(
    problem: SearchProblem,
    corpus: Corpus | None,
    sentence_threshold: int = 1,
    sample_size: int | None = None,
    seed: int = 0,
    iteration_node_cap: int | None = None,
    interrupt=None,
    deadline: float | None = None,
) -> CounterfactualResult:
    """Sentence-focused variant for longer texts.

    Texts with at most `sentence_threshold` sentences delegate to
    anytime_search. Otherwise each outer iteration ranks sentences by
    importance and searches them one at a time (edits restricted to the
    sentence, everything evaluated on the full text). A sentence search that
    ends without a goal leaves its most promising modification in the
    working text before the next sentence is tried; a full-text goal ends
    the round, then w_h halves as usual.
    """
    if problem.x.num_sentences() <= sentence_threshold:
        return anytime_search(
            problem,
            corpus,
            sample_size=sample_size,
            seed=seed,
            iteration_node_cap=iteration_node_cap,
            interrupt=interrupt,
            deadline=deadline,
        )

    default = (
        default_counterfactual(corpus, problem, sample_size, seed)
        if corpus is not None
        else None
    )
    tracker = _BestTracker(problem, default)

    if is_goal(problem.x, problem):
        root = SearchNode(problem.x, 0.0, 0.0, 0.0)
        tracker.offer(_goal_result(problem, root, 1.0))
        return tracker.finish()

    w_h = 1.0
    stop = False
    while not stop:
        if interrupt is not None and interrupt():
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        ec_before = problem.ledger.ec_count
        improved = False

        working = problem.x
        order = sorted(
            range(problem.x.num_sentences()),
            key=lambda i: -sentence_importance(
                problem.x, i, problem.target, problem.classifier
            ),
        )
        for sent_idx in order:
            if sent_idx >= working.num_sentences():
                continue
            outcome = weighted_astar(
                problem,
                w_h,
                iteration_node_cap=iteration_node_cap,
                root=working,
                sentence_index=sent_idx,
                interrupt=interrupt,
                deadline=deadline,
            )
            if outcome.goal is not None:
                result = _goal_result(problem, outcome.goal, w_h)
                # sub-searches filter against the working text's loss; the
                # returned solution must still be plausible against x itself
                if result.plausibility_ratio is None or (
                    result.plausibility_ratio <= problem.gamma
                ):
                    improved = tracker.offer(result) or improved
                break
            if outcome.exhausted_budget or outcome.interrupted:
                stop = True
                break
            if outcome.best_h_node is not None and outcome.best_h_node.text is not working:
                current_h = heuristic(working, problem.target, problem.tau, problem.classifier)
                if outcome.best_h_node.h < current_h:
                    working = outcome.best_h_node.text
        if stop:
            break
        if problem.ledger.ec_count == ec_before and not improved:
            break
        w_h /= 2.0
    return tracker.finish()
