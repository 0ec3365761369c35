"""Benchmark the compiled edit-distance kernels against the pure-Python
fallback.

The two kernels sit in the search's inner loop (one distance evaluation per
generated candidate), so this is the hot path worth compiling. Run:

    python benchmarks/bench_kernels.py
"""

import random
import statistics
import timeit

from textcf import _kernels_py, kernels
from textcf.distance import TreeNode, _postorder_arrays


def make_token_pairs(rng, count, length):
    vocab = list(range(50))
    pairs = []
    for _ in range(count):
        a = [rng.choice(vocab) for _ in range(length)]
        b = list(a)
        for _ in range(max(1, length // 8)):  # a few edits, like search states
            b[rng.randrange(length)] = rng.choice(vocab)
        pairs.append((kernels.as_int_array(a), kernels.as_int_array(b)))
    return pairs


def make_tree_pairs(rng, count, sentence_len):
    words = ["movie", "great", "dull", "the", "was", "food", "fine", "plain"]
    tags = ["noun", "adjective", "determiner", "verb"]
    pairs = []
    for _ in range(count):
        toks = [rng.choice(words) for _ in range(sentence_len)]
        tgs = [rng.choice(tags) for _ in range(sentence_len)]
        other = list(toks)
        other[rng.randrange(sentence_len)] = rng.choice(words)

        def tree(tokens):
            root = TreeNode("S")
            for tok, tag in zip(tokens, tgs):
                root.children.append(TreeNode(tag, [TreeNode(tok)]))
            return root

        labels = {}
        pairs.append(
            (_postorder_arrays(tree(toks), labels), _postorder_arrays(tree(other), labels))
        )
    return pairs


def bench(label, fn, repeats=3):
    times = timeit.repeat(fn, number=1, repeat=repeats)
    best = min(times)
    print(f"  {label:<18} {best * 1000:8.2f} ms   (median {statistics.median(times) * 1000:.2f} ms)")
    return best


def main():
    rng = random.Random(0)
    impls = [("compiled" if kernels.BACKEND == "cython" else "python", kernels)]
    if kernels.BACKEND == "cython":
        impls.append(("python", _kernels_py))
    else:
        print("compiled extension not built; benchmarking the fallback only")

    for length in (16, 64, 128):
        pairs = make_token_pairs(rng, 1000, length)
        print(f"Levenshtein, 1000 pairs of length {length}:")
        results = {}
        for name, impl in impls:
            results[name] = bench(
                name, lambda impl=impl: [impl.lev_distance(a, b) for a, b in pairs]
            )
        if len(results) == 2:
            print(f"  speedup            {results['python'] / results['compiled']:8.1f}x")

    for sentence_len in (8, 24):
        pairs = make_tree_pairs(rng, 300, sentence_len)
        print(f"Tree edit distance, 300 pairs of {sentence_len}-token sentences:")
        results = {}
        for name, impl in impls:
            results[name] = bench(
                name,
                lambda impl=impl: [
                    impl.tree_distance(*a, *b) for a, b in pairs
                ],
            )
        if len(results) == 2:
            print(f"  speedup            {results['python'] / results['compiled']:8.1f}x")


if __name__ == "__main__":
    main()
