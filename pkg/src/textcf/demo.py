"""Synthetic sentiment-style datasets for demos and tests.

The construction plants class-determining adjectives so that a bag-of-words
classifier keys on them and a single bank swap flips the prediction:

* positive texts carry two planted adjectives ("... was superb and splendid"),
  so removing one never flips the class, while swapping one for a (stronger)
  negative planted word does;
* negative texts use a different sentence skeleton, so mask suggestions at
  the planted slots rank neutral calibration words first and the planted
  words of the other class are never proposed;
* the planted vocabulary avoids the bundled antonym pairs.

`python -m textcf.demo OUT_DIR` writes a ready-to-use dataset (JSON lines)
and a matching word-vector table.
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

__all__ = [
    "NEGATIVE_WORDS",
    "POSITIVE_WORDS",
    "generate_examples",
    "write_jsonl",
    "write_vectors",
]

POSITIVE_WORDS = ("superb", "delightful", "marvelous", "splendid", "terrific")
NEGATIVE_WORDS = ("dreadful", "atrocious")

_OPENERS = ("honestly", "truly", "really")
_SUBJECTS = ("movie", "film", "place", "dinner", "service",
             "show", "story", "menu", "game", "soundtrack")
_CALM_ADJECTIVES = ("plain", "ordinary")
_FILLERS = (
    "we went there on a quiet evening .",
    "my friend came along for the visit .",
    "it was a long day in town .",
    "the staff remembered our order .",
    "i read about it in the news .",
)

# fraction of negative texts carrying their planted words in a separate
# marker sentence instead of the shared "... was X and Y" skeleton; the rare
# in-skeleton usage keeps a bank swap plausible under the language model
# while staying below the mask suggester's score filter
_NEG_MARKER_SHARE = 0.8


def _skeleton(rng: random.Random, w1: str, w2: str) -> str:
    return f"{rng.choice(_OPENERS)} the {rng.choice(_SUBJECTS)} was {w1} and {w2} ."


def _calibration_sentence(rng: random.Random) -> str:
    # a class-neutral "<noun> was <adjective>" pattern shared by both classes,
    # anchoring the mask suggesters on neutral fills
    a1, a2 = rng.sample(_CALM_ADJECTIVES, 2)
    return f"the {rng.choice(_SUBJECTS)} was {a1} and {a2} too ."


def _planted_sentences(rng: random.Random, label: str) -> list[str]:
    if label == "pos":
        w1, w2 = rng.sample(POSITIVE_WORDS, 2)
        return [_skeleton(rng, w1, w2), _calibration_sentence(rng)]
    n1, n2 = rng.sample(NEGATIVE_WORDS, 2)
    if rng.random() < _NEG_MARKER_SHARE:
        # same word bag as skeleton+calibration, so per-class counts of the
        # shared vocabulary stay identical across the two classes
        a1, a2 = rng.sample(_CALM_ADJECTIVES, 2)
        marker = f"{n1} and {n2} was the {rng.choice(_SUBJECTS)} too ."
        return [_skeleton(rng, a1, a2), marker]
    return [_skeleton(rng, n1, n2), _calibration_sentence(rng)]


def generate_examples(
    n: int = 500, seed: int = 7, sentences: int = 2
) -> list[tuple[str, str]]:
    """Build n labeled texts, alternating classes so the output is balanced.

    Every text has two core sentences (the class-bearing one plus either a
    neutral calibration sentence or the negative marker); with sentences > 2
    neutral fillers pad the remainder.
    """
    sentences = max(2, sentences)
    rng = random.Random(seed)
    out = []
    for i in range(n):
        label = "pos" if i % 2 == 0 else "neg"
        parts = _planted_sentences(rng, label)
        for _ in range(sentences - 2):
            parts.insert(rng.randrange(1, len(parts) + 1), rng.choice(_FILLERS))
        out.append((" ".join(parts), label))
    return out


def write_jsonl(path, examples) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for text, label in examples:
            fh.write(json.dumps({"text": text, "label": label}) + "\n")


def write_vectors(path, examples, dim: int = 8, seed: int = 7) -> None:
    """GloVe-style vector file over the dataset vocabulary; planted words get
    class-dependent offsets so that POS selection separates the classes."""
    from textcf.corpus import tokenize

    rng = random.Random(seed)
    vocab: list[str] = []
    seen = set()
    for text, _ in examples:
        for tok in tokenize(text).tokens:
            tok = tok.lower()
            if tok not in seen:
                seen.add(tok)
                vocab.append(tok)
    with open(path, "w", encoding="utf-8") as fh:
        for word in vocab:
            vec = [rng.gauss(0.0, 0.3) for _ in range(dim)]
            if word in POSITIVE_WORDS:
                vec[0] += 3.0
            elif word in NEGATIVE_WORDS:
                vec[0] -= 3.0
            fh.write(word + " " + " ".join(f"{v:.4f}" for v in vec) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="write a synthetic demo dataset")
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--sentences", type=int, default=2)
    args = parser.parse_args(argv)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    examples = generate_examples(args.n, args.seed, args.sentences)
    write_jsonl(args.out_dir / "dataset.jsonl", examples)
    write_vectors(args.out_dir / "vectors.txt", examples, seed=args.seed)
    print(f"wrote {len(examples)} examples to {args.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
