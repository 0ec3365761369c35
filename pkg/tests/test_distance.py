import os
import random
import subprocess
import sys

import numpy as np
import pytest

from oracles import lev_recursive, ted_exhaustive
from textcf import kernels
from textcf.corpus import tokenize
from textcf.distance import (
    CosineDistance,
    LevenshteinDistance,
    TreeDistance,
    TreeNode,
    build_shallow_tree,
    cosine_distance_normalized,
    get_distance,
    lev_distance_normalized,
    node_count,
    tree_edit_distance_normalized,
    zhang_shasha,
)
from textcf.models import Embedder


def random_tree(rng: random.Random, max_nodes: int) -> TreeNode:
    labels = "ABCD"
    n = rng.randint(1, max_nodes)
    nodes = [TreeNode(rng.choice(labels))]
    for _ in range(n - 1):
        parent = rng.choice(nodes)
        child = TreeNode(rng.choice(labels))
        parent.children.append(child)
        nodes.append(child)
    return nodes[0]


class TestLevenshtein:
    def test_identity(self):
        x = tokenize("some words here")
        assert lev_distance_normalized(x, x) == 0.0

    def test_table_pair_is_exactly_one_tenth(self):
        x = tokenize("best punjabi food i've had in the north american continent")
        y = tokenize("worst punjabi food i've had in the north american continent")
        assert len(tokenize(x.raw).tokens) == 10
        assert lev_distance_normalized(x, y) == pytest.approx(0.1, abs=0)
        assert lev_recursive(x.tokens, y.tokens) == 1

    def test_can_exceed_one(self):
        assert lev_distance_normalized(tokenize("a b"), tokenize("a b c d")) == 1.0

    def test_empty_original_rejected(self):
        with pytest.raises(ValueError):
            lev_distance_normalized(tokenize(""), tokenize("a"))

    def test_matches_recursive_oracle(self):
        rng = random.Random(0)
        vocab = ["a", "b", "c", "d"]
        for _ in range(200):
            s = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
            t = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            got = kernels.lev_distance(
                kernels.as_int_array([vocab.index(w) for w in s]),
                kernels.as_int_array([vocab.index(w) for w in t]),
            )
            assert got == lev_recursive(s, t)

    def test_symmetry_and_triangle(self):
        rng = random.Random(1)
        vocab = list(range(5))
        def dist(a, b):
            return kernels.lev_distance(kernels.as_int_array(a), kernels.as_int_array(b))
        for _ in range(200):
            seqs = [
                [rng.choice(vocab) for _ in range(rng.randint(0, 7))] for _ in range(3)
            ]
            a, b, c = seqs
            assert dist(a, b) == dist(b, a)
            assert dist(a, c) <= dist(a, b) + dist(b, c)


class TestCosine:
    class TableEmbedder(Embedder):
        def __init__(self, table):
            self.table = table
            self.dim = 2

        def embed(self, text):
            vecs = [self.table[t] for t in text.split() if t in self.table]
            return np.mean(vecs, axis=0) if vecs else np.zeros(2)

        def embed_word(self, word):
            return self.table.get(word)

    def test_identical(self):
        emb = self.TableEmbedder({"a": np.array([1.0, 1.0])})
        assert cosine_distance_normalized(tokenize("a"), tokenize("a"), emb) == 0.0

    def test_antipodal(self):
        emb = self.TableEmbedder({"a": np.array([1.0, 0.0]), "b": np.array([-1.0, 0.0])})
        assert cosine_distance_normalized(tokenize("a"), tokenize("b"), emb) == 1.0

    def test_orthogonal(self):
        emb = self.TableEmbedder({"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])})
        assert cosine_distance_normalized(tokenize("a"), tokenize("b"), emb) == 0.5

    def test_zero_vector_rules(self):
        emb = self.TableEmbedder({"a": np.array([1.0, 0.0])})
        assert cosine_distance_normalized(tokenize("a"), tokenize("zz"), emb) == 1.0
        assert cosine_distance_normalized(tokenize("zz"), tokenize("qq"), emb) == 0.0

    def test_range_and_scale_invariance_on_random_vectors(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            va, vb = rng.normal(size=3), rng.normal(size=3)
            d = 1.0 - float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))
            d /= 2.0
            assert -1e-12 <= d <= 1.0 + 1e-12
            scaled = 1.0 - float(
                (3.7 * va) @ vb / (np.linalg.norm(3.7 * va) * np.linalg.norm(vb))
            )
            assert abs(scaled / 2.0 - d) < 1e-9


class TestZhangShasha:
    def test_identical(self):
        t = TreeNode("A", [TreeNode("B"), TreeNode("C")])
        s = TreeNode("A", [TreeNode("B"), TreeNode("C")])
        assert zhang_shasha(t, s) == 0

    def test_single_relabel(self):
        assert zhang_shasha(TreeNode("A"), TreeNode("B")) == 1

    def test_single_leaf_insertion(self):
        a = TreeNode("A", [TreeNode("B"), TreeNode("C")])
        b = TreeNode("A", [TreeNode("B")])
        assert zhang_shasha(a, b) == 1
        assert ted_exhaustive(a, b) == 1

    def test_matches_exhaustive_mapping_search(self):
        rng = random.Random(7)
        for _ in range(100):
            a = random_tree(rng, 6)
            b = random_tree(rng, 6)
            assert zhang_shasha(a, b) == ted_exhaustive(a, b)

    def test_symmetric(self):
        rng = random.Random(9)
        for _ in range(50):
            a = random_tree(rng, 6)
            b = random_tree(rng, 6)
            assert zhang_shasha(a, b) == zhang_shasha(b, a)


class TestKernelBackends:
    def test_compiled_backend_active(self):
        # the editable install builds the extension; the benchmark compares both
        assert kernels.BACKEND in ("cython", "python")

    def test_backends_agree(self):
        code = """
import random, json
from textcf import kernels
from textcf.distance import TreeNode, zhang_shasha
rng = random.Random(5)
out = []
for _ in range(60):
    a = [rng.randint(0, 4) for _ in range(rng.randint(0, 10))]
    b = [rng.randint(0, 4) for _ in range(rng.randint(0, 10))]
    out.append(kernels.lev_distance(kernels.as_int_array(a), kernels.as_int_array(b)))
print(json.dumps([kernels.BACKEND, out]))
"""
        results = {}
        for force in ("0", "1"):
            env = dict(os.environ, TEXTCF_PURE_PYTHON=force)
            proc = subprocess.run(
                [sys.executable, "-c", code], capture_output=True, text=True, env=env
            )
            assert proc.returncode == 0, proc.stderr
            import json

            backend, values = json.loads(proc.stdout)
            results[force] = (backend, values)
        assert results["1"][0] == "python"
        assert results["0"][1] == results["1"][1]


class TestShallowTree:
    def test_structure(self):
        tree = build_shallow_tree(("dull", "."), ("adjective", "punctuation"))
        assert tree.label == "S"
        assert [c.label for c in tree.children] == ["adjective", "punctuation"]
        assert tree.children[0].children[0].label == "dull"

    def test_empty_sentence(self):
        tree = build_shallow_tree((), ())
        assert tree.label == "S" and tree.children == []

    def test_node_count(self):
        tree = build_shallow_tree(("a", "b", "c"), ("other",) * 3)
        assert node_count(tree) == 1 + 2 * 3


class TestTreeDistanceNormalized:
    def test_identity(self):
        x = tokenize("fine food. good day.")
        assert tree_edit_distance_normalized(x, x) == 0.0

    def test_one_relabel_in_ten_tokens(self):
        x = tokenize("best punjabi food in the north american continent area yes")
        y = tokenize("worst punjabi food in the north american continent area yes")
        assert len(x.tokens) == 10
        assert tree_edit_distance_normalized(x, y) == pytest.approx(1 / 10)

    def test_unpaired_sentence_costs_node_count(self):
        x = tokenize("good day.")
        y = tokenize("good day. more words here.")
        # extra 4-token sentence -> 1 + 2*4 nodes over |x| = 3 tokens
        assert tree_edit_distance_normalized(x, y) == pytest.approx((1 + 8) / 3)

    def test_empty_original_rejected(self):
        with pytest.raises(ValueError):
            tree_edit_distance_normalized(tokenize("#"), tokenize("a"))


class TestRegistry:
    def test_keys(self):
        assert isinstance(get_distance("levenshtein"), LevenshteinDistance)
        assert isinstance(get_distance("tree"), TreeDistance)
        emb = TestCosine.TableEmbedder({})
        assert isinstance(get_distance("cosine", emb), CosineDistance)

    def test_cosine_requires_embedder(self):
        with pytest.raises(ValueError):
            get_distance("cosine")

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            get_distance("hamming")

    def test_all_distances_zero_on_identity(self, bundle):
        x = tokenize("honestly the movie was superb and splendid .")
        for key in ("levenshtein", "tree", "cosine"):
            fn = get_distance(key, bundle.embedder)
            assert fn.dist(x, x) == 0.0
