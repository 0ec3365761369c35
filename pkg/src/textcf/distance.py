"""User-selectable text distances.

All three distances are measured on cleaned texts and normalized by the
token count of the original text, so they are directly usable as the search
cost g. Normalizing by the original only makes the normalized values
asymmetric; that is deliberate and documented, not a bug.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from textcf import kernels
from textcf.corpus import TokenizedText, clean_text, tokenize
from textcf.models import Embedder

__all__ = [
    "DistanceFn",
    "CosineDistance",
    "LevenshteinDistance",
    "TreeDistance",
    "TreeNode",
    "build_shallow_tree",
    "cosine_distance_normalized",
    "get_distance",
    "lev_distance_normalized",
    "node_count",
    "tree_edit_distance_normalized",
    "zhang_shasha",
]


def _cleaned(t: TokenizedText) -> TokenizedText:
    return tokenize(clean_text(t.raw))


def _token_ids(a: tuple[str, ...], b: tuple[str, ...]):
    interned: dict[str, int] = {}
    def ids(tokens):
        out = []
        for tok in tokens:
            idx = interned.setdefault(tok, len(interned))
            out.append(idx)
        return kernels.as_int_array(out)
    return ids(a), ids(b)


def lev_distance_normalized(x: TokenizedText, x_hat: TokenizedText) -> float:
    """Word-level edit distance over cleaned token sequences, divided by the
    cleaned token count of x. May exceed 1 when x_hat is much longer."""
    cx, cy = _cleaned(x), _cleaned(x_hat)
    if not cx.tokens:
        raise ValueError("cannot normalize by an empty original text")
    ids_a, ids_b = _token_ids(cx.tokens, cy.tokens)
    return kernels.lev_distance(ids_a, ids_b) / len(cx.tokens)


def cosine_distance_normalized(
    x: TokenizedText, x_hat: TokenizedText, embedder: Embedder
) -> float:
    """(1 - cosine similarity) / 2 between the cleaned texts' encodings.

    A single zero encoding is maximally far (1.0); two zero encodings are
    identical (0.0).
    """
    ca, cb = clean_text(x.raw), clean_text(x_hat.raw)
    if ca == cb:  # identical texts are exactly at distance zero
        return 0.0
    va = embedder.embed(ca)
    vb = embedder.embed(cb)
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 and nb == 0.0:
        return 0.0
    if na == 0.0 or nb == 0.0:
        return 1.0
    cos = float(np.dot(va, vb) / (na * nb))
    cos = min(1.0, max(-1.0, cos))
    return (1.0 - cos) / 2.0


# ---------------------------------------------------------------------------
# Syntactic tree distance


@dataclass
class TreeNode:
    label: str
    children: list["TreeNode"] = field(default_factory=list)


def build_shallow_tree(tokens, tags) -> TreeNode:
    """Two-level stand-in parse: S -> POS -> word. A richer parser can be
    plugged into TreeDistance instead."""
    root = TreeNode("S")
    for tok, tag in zip(tokens, tags):
        root.children.append(TreeNode(tag, [TreeNode(tok.lower())]))
    return root


def node_count(tree: TreeNode) -> int:
    return 1 + sum(node_count(c) for c in tree.children)


def _postorder_arrays(root: TreeNode, labels: dict[str, int]):
    """Flatten a tree to the post-order label/leftmost-descendant/keyroot
    arrays consumed by the tree-edit kernel."""
    order: list[TreeNode] = []
    lmd_of: dict[int, int] = {}

    def walk(node: TreeNode) -> int:
        if node.children:
            first = walk(node.children[0])
            for child in node.children[1:]:
                walk(child)
            order.append(node)
            idx = len(order) - 1
            lmd_of[idx] = first
            return first
        order.append(node)
        idx = len(order) - 1
        lmd_of[idx] = idx
        return idx

    walk(root)
    label_ids = [labels.setdefault(n.label, len(labels)) for n in order]
    lmds = [lmd_of[i] for i in range(len(order))]
    last_with_lmd: dict[int, int] = {}
    for i, l in enumerate(lmds):
        last_with_lmd[l] = i
    keyroots = sorted(last_with_lmd.values())
    return (
        kernels.as_int_array(label_ids),
        kernels.as_int_array(lmds),
        kernels.as_int_array(keyroots),
    )


def zhang_shasha(a: TreeNode, b: TreeNode) -> int:
    """Minimum-cost tree edit script under unit insert/delete/relabel costs,
    via the keyroot/post-order dynamic program."""
    labels: dict[str, int] = {}
    la, lmda, kra = _postorder_arrays(a, labels)
    lb, lmdb, krb = _postorder_arrays(b, labels)
    return kernels.tree_distance(la, lmda, kra, lb, lmdb, krb)


def tree_edit_distance_normalized(
    x: TokenizedText, x_hat: TokenizedText, parser=build_shallow_tree
) -> float:
    """Sum of per-sentence tree edit distances divided by the token count of
    x. Sentences are paired by index; an unpaired sentence costs its whole
    node count (a pure insertion or deletion)."""
    cx, cy = _cleaned(x), _cleaned(x_hat)
    if not cx.tokens:
        raise ValueError("cannot normalize by an empty original text")

    def trees(t: TokenizedText):
        return [
            parser(t.tokens[s:e], t.pos_tags[s:e]) for s, e in t.sentence_bounds
        ]

    ta, tb = trees(cx), trees(cy)
    total = 0
    for i in range(max(len(ta), len(tb))):
        if i >= len(ta):
            total += node_count(tb[i])
        elif i >= len(tb):
            total += node_count(ta[i])
        else:
            total += zhang_shasha(ta[i], tb[i])
    return total / len(cx.tokens)


# ---------------------------------------------------------------------------
# The DistanceFn interface and registry


class DistanceFn:
    """A distance usable as the search cost; dist(x, x) == 0, dist >= 0."""

    key = ""

    def dist(self, x: TokenizedText, x_hat: TokenizedText) -> float:
        raise NotImplementedError


class LevenshteinDistance(DistanceFn):
    key = "levenshtein"

    def dist(self, x, x_hat):
        return lev_distance_normalized(x, x_hat)


class CosineDistance(DistanceFn):
    key = "cosine"

    def __init__(self, embedder: Embedder):
        self.embedder = embedder

    def dist(self, x, x_hat):
        return cosine_distance_normalized(x, x_hat, self.embedder)


class TreeDistance(DistanceFn):
    key = "tree"

    def __init__(self, parser=build_shallow_tree):
        self.parser = parser

    def dist(self, x, x_hat):
        return tree_edit_distance_normalized(x, x_hat, self.parser)


_REGISTRY: dict[str, type] = {}


def register_distance(key: str, factory) -> None:
    _REGISTRY[key] = factory


def get_distance(key: str, embedder: Embedder | None = None) -> DistanceFn:
    """Build a distance by config key: levenshtein | cosine | tree, plus any
    custom registrations."""
    if key == "levenshtein":
        return LevenshteinDistance()
    if key == "cosine":
        if embedder is None:
            raise ValueError("cosine distance needs an embedder")
        return CosineDistance(embedder)
    if key == "tree":
        return TreeDistance()
    if key in _REGISTRY:
        return _REGISTRY[key]()
    raise ValueError(f"unknown distance {key!r}")
