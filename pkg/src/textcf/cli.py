"""Command-line front end and experiment harness.

Verbs:
    preprocess  train built-in models, mine the word banks, persist artifacts
    explain     counterfactual explanation for one text
    batch       explain a sampled test set, write a JSON-lines report
    ablation    batch under full / no-DWB / no-antonyms operator sets
    anytime     batch with best-so-far distance recorded at EC checkpoints

All randomness is seeded; identical configs produce identical artifacts and
reports.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import random
import statistics
import sys
import time
from pathlib import Path

from textcf import banks as banks_mod
from textcf import models, remote, stats
from textcf.corpus import Corpus, balance_classes, load_dataset, tokenize
from textcf.distance import get_distance
from textcf.operators import load_antonyms
from textcf.search import (
    ALL_OPERATORS,
    CounterfactualResult,
    SearchProblem,
    focused_search,
    is_goal,
)

EXPLANATION_TEMPLATE = (
    'If "{x}" had been changed to "{x_hat}", the classification would have '
    'changed from "{y}" to "{y_hat}".'
)


@dataclasses.dataclass
class RunConfig:
    """Run settings; defaults are the standard experimental configuration."""

    dataset: str | None = None
    format: str | None = None
    artifacts: str = "artifacts"
    remote_url: str | None = None
    distance: str = "levenshtein"
    tau: float = 0.5
    budget: int = 2000
    alpha: float = 0.5
    gamma: float = 1.5
    k: int = 10
    top_n: int = 10
    operators: tuple[str, ...] = tuple(sorted(ALL_OPERATORS))
    seed: int = 0
    sentence_threshold: int = 1
    sample_size: int | None = None
    checkpoints: tuple[int, ...] = (50, 200, 500, 1000, 2000)
    explain_n: int = 200
    vocab_cap: int = 1500
    lm_order: int = 2
    vectors: str | None = None
    deadline_ms: int | None = None
    label_map: dict | None = None

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            data = {}
            for line in text.splitlines():
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}: expected key=value lines or JSON")
                key, _, value = line.partition("=")
                data[key.strip()] = json.loads(value.strip())
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("operators", "checkpoints"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["operators"] = list(self.operators)
        data["checkpoints"] = list(self.checkpoints)
        return data


def _parse_operators(value: str) -> tuple[str, ...]:
    ops = tuple(sorted({part.strip() for part in value.split(",") if part.strip()}))
    unknown = set(ops) - ALL_OPERATORS
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown operators: {sorted(unknown)}")
    return ops


def _parse_checkpoints(value: str) -> tuple[int, ...]:
    points = tuple(int(part) for part in value.split(",") if part.strip())
    if any(b <= a for a, b in zip(points, points[1:])):
        raise argparse.ArgumentTypeError("checkpoints must be strictly ascending")
    return points


# ---------------------------------------------------------------------------
# Artifacts


def _dump_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_preprocess(cfg: RunConfig) -> int:
    if not cfg.dataset:
        raise SystemExit("preprocess needs --dataset")
    out = Path(cfg.artifacts)
    out.mkdir(parents=True, exist_ok=True)

    corpus = load_dataset(cfg.dataset, cfg.format)
    if cfg.label_map:
        mapped = []
        for text, label in corpus.examples:
            if label in cfg.label_map:
                new = cfg.label_map[label]
                if new is None:
                    continue
                label = new
            mapped.append((text, label))
        labels = []
        for _, label in mapped:
            if label not in labels:
                labels.append(label)
        corpus = Corpus(examples=tuple(mapped), labels=tuple(labels))
    corpus = balance_classes(corpus, cfg.seed)

    idxs = list(range(len(corpus.examples)))
    rng = random.Random(cfg.seed)
    rng.shuffle(idxs)
    explain_count = min(cfg.explain_n, len(idxs) // 2)
    explain_idx = set(idxs[:explain_count])
    rest = idxs[explain_count:]
    cut = int(round(len(rest) * 0.8))
    train_idx = set(rest[:cut])

    split_of = {}
    for i in range(len(corpus.examples)):
        split_of[i] = "explain" if i in explain_idx else ("train" if i in train_idx else "test")
    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for i, (text, label) in enumerate(corpus.examples):
            fh.write(
                json.dumps(
                    {"text": text, "label": label, "split": split_of[i]}, sort_keys=True
                )
                + "\n"
            )

    train = Corpus(
        examples=tuple(
            ex for i, ex in enumerate(corpus.examples) if split_of[i] == "train"
        ),
        labels=corpus.labels,
    )
    print(f"splits: train={len(train.examples)} "
          f"test={sum(1 for s in split_of.values() if s == 'test')} "
          f"explain={explain_count}")

    classifier = models.train_naive_bayes(train, cfg.vocab_cap)
    lm = models.train_ngram_lm(train, cfg.lm_order)
    suggesters = models.train_class_suggesters(train, cfg.lm_order)
    if cfg.vectors:
        embedder = models.load_word_vectors(cfg.vectors)
        embedder_json = {"kind": "vectors", "path": str(cfg.vectors)}
    else:
        embedder = models.train_count_embedder(train)
        embedder_json = {"kind": "count", **embedder.to_json()}
    selection = banks_mod.select_differentiating_pos(train, embedder)
    word_banks = banks_mod.build_word_banks(train, selection, cfg.k)

    _dump_json(out / "config.json", cfg.to_dict())
    _dump_json(out / "classifier.json", classifier.to_json())
    _dump_json(out / "lm.json", lm.to_json())
    _dump_json(
        out / "suggesters.json", {label: s.to_json() for label, s in suggesters.items()}
    )
    _dump_json(out / "embedder.json", embedder_json)
    _dump_json(
        out / "pos_selection.json",
        {
            "differentiating": sorted(selection.differentiating),
            "p_values": selection.p_values,
        },
    )
    banks_mod.save_banks(word_banks, out / "banks.json")

    print(f"differentiating POS: {sorted(selection.differentiating) or '(none)'}")
    for bank in word_banks:
        if bank.entries:
            words = ", ".join(f"{w} (p={p:.2e})" for w, p in bank.entries)
            print(f"bank {bank.class_id}/{bank.pos}: {words}")
    print(f"artifacts written to {out}")
    return 0


class Artifacts:
    """Preprocess outputs loaded back for the explanation commands."""

    def __init__(self, path: Path):
        self.path = path
        examples = []
        self.splits: dict[str, list[tuple[str, str]]] = {"train": [], "test": [], "explain": []}
        with open(path / "corpus.jsonl", encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                examples.append((rec["text"], rec["label"]))
                self.splits[rec["split"]].append((rec["text"], rec["label"]))
        labels = []
        for _, label in examples:
            if label not in labels:
                labels.append(label)
        self.labels = tuple(labels)
        self.train = Corpus(examples=tuple(self.splits["train"]), labels=self.labels)
        with open(path / "classifier.json", encoding="utf-8") as fh:
            self.classifier = models.NaiveBayesClassifier.from_json(json.load(fh))
        with open(path / "lm.json", encoding="utf-8") as fh:
            self.lm = models.NgramLanguageModel.from_json(json.load(fh))
        with open(path / "suggesters.json", encoding="utf-8") as fh:
            self.suggesters = {
                label: models.BigramSuggester.from_json(data)
                for label, data in json.load(fh).items()
            }
        with open(path / "embedder.json", encoding="utf-8") as fh:
            emb = json.load(fh)
        if emb["kind"] == "vectors":
            self.embedder = models.load_word_vectors(emb["path"])
        else:
            self.embedder = models.CountEmbedder.from_json(emb)
        with open(path / "pos_selection.json", encoding="utf-8") as fh:
            sel = json.load(fh)
        self.pos_selection = banks_mod.PosSelection(
            differentiating=frozenset(sel["differentiating"]), p_values=sel["p_values"]
        )
        self.banks = banks_mod.load_banks(path / "banks.json")
        self.antonyms = load_antonyms()


def _scorers(cfg: RunConfig, art: Artifacts):
    """Pick built-in or remote scorer implementations."""
    if cfg.remote_url:
        classifier = remote.remote_scorer(cfg.remote_url, "classifier")
        labels = classifier.labels
        lm = remote.remote_scorer(cfg.remote_url, "lm")
        suggesters = {
            label: remote.remote_scorer(cfg.remote_url, "mask_fill", label)
            for label in labels
        }
        embedder = remote.remote_scorer(cfg.remote_url, "embedder")
        return classifier, lm, suggesters, embedder, labels
    return art.classifier, art.lm, art.suggesters, art.embedder, art.labels


def _make_problem(cfg: RunConfig, art: Artifacts, scorers, text: str, target: str):
    classifier, lm, suggesters, embedder, labels = scorers
    if target not in labels:
        raise SystemExit(f"target {target!r} is not one of the classes {list(labels)}")
    return SearchProblem(
        x=tokenize(text),
        target=target,
        tau=cfg.tau,
        distance=get_distance(cfg.distance, embedder),
        classifier=classifier,
        suggesters=suggesters,
        plausibility=lm,
        banks=art.banks,
        pos_selection=art.pos_selection,
        antonyms=art.antonyms,
        ledger=models.EcLedger(cfg.budget),
        enabled_operators=frozenset(cfg.operators),
        alpha=cfg.alpha,
        gamma=cfg.gamma,
        top_n=cfg.top_n,
    )


def _deadline(cfg: RunConfig) -> float | None:
    if cfg.deadline_ms is None:
        return None
    return time.monotonic() + cfg.deadline_ms / 1000.0


def _run_one(cfg: RunConfig, art: Artifacts, scorers, text: str, target: str):
    problem = _make_problem(cfg, art, scorers, text, target)
    result = focused_search(
        problem,
        art.train,
        sentence_threshold=cfg.sentence_threshold,
        sample_size=cfg.sample_size,
        seed=cfg.seed,
        deadline=_deadline(cfg),
    )
    if result.found():
        # the validity guarantee is asserted on every end-to-end run
        if not is_goal(tokenize(result.counterfactual), problem):
            raise RuntimeError("internal error: returned counterfactual fails the goal test")
    if result.ec_used > cfg.budget:
        raise RuntimeError("internal error: expensive-call budget exceeded")
    return result


def _resample(timeline, checkpoints):
    """Best-so-far distance at each checkpoint, carried forward."""
    out = []
    for cp in checkpoints:
        value = None
        for ec, dist in timeline:
            if ec <= cp and not math.isinf(dist):
                value = dist
        out.append((cp, value))
    return out


def _record(cfg: RunConfig, result: CounterfactualResult, target: str, predicted: str, index: int):
    return {
        "example_index": index,
        "predicted": predicted,
        "target": target,
        "original": result.original,
        "counterfactual": result.counterfactual,
        "source": result.source,
        "distance": None if math.isinf(result.distance) else result.distance,
        "target_proba": result.target_proba,
        "plausibility_ratio": result.plausibility_ratio,
        "ec_used": result.ec_used,
        "w_h_at_solution": result.w_h_at_solution,
        "edit_trace": [
            {"kind": e.kind, "position": e.position, "new_word": e.new_word}
            for e in result.edit_trace
        ],
        "checkpoints": [[cp, value] for cp, value in _resample(result.timeline, cfg.checkpoints)],
    }


def cmd_explain(cfg: RunConfig, text: str, target: str) -> int:
    art = Artifacts(Path(cfg.artifacts))
    scorers = _scorers(cfg, art)
    classifier = scorers[0]
    predicted = classifier.predict(text)
    result = _run_one(cfg, art, scorers, text, target)
    if not result.found():
        print("no counterfactual found within budget", file=sys.stderr)
        print(json.dumps(_record(cfg, result, target, predicted, 0), sort_keys=True))
        return 1
    print(
        EXPLANATION_TEMPLATE.format(
            x=result.original, x_hat=result.counterfactual, y=predicted, y_hat=target
        )
    )
    print(json.dumps(_record(cfg, result, target, predicted, 0), sort_keys=True))
    return 0


def _batch_records(cfg: RunConfig, art: Artifacts, scorers, n: int) -> list[dict]:
    examples = art.splits["explain"]
    if not examples:
        raise SystemExit("no explanation split in the artifacts; rerun preprocess")
    rng = random.Random(cfg.seed)
    count = min(n, len(examples))
    chosen = sorted(rng.sample(range(len(examples)), count))
    classifier = scorers[0]
    labels = scorers[4]
    records = []
    for idx in chosen:
        text, _ = examples[idx]
        predicted = classifier.predict(text)
        targets = [label for label in labels if label != predicted]
        for target in targets:
            try:
                result = _run_one(cfg, art, scorers, text, target)
            except remote.ScorerError as exc:
                # fatal for this run only; the batch carries on
                failed = _record(
                    cfg,
                    CounterfactualResult(
                        original=text, counterfactual=None, source="none",
                        distance=math.inf, target_proba=0.0,
                        plausibility_ratio=None, ec_used=0, w_h_at_solution=None,
                    ),
                    target, predicted, idx,
                )
                failed["error"] = str(exc)
                records.append(failed)
                continue
            records.append(_record(cfg, result, target, predicted, idx))
    return records


def _aggregate(records: list[dict]) -> dict:
    found = [r["distance"] for r in records if r["distance"] is not None]
    ratios = [
        r["plausibility_ratio"]
        for r in records
        if r["source"] == "search" and r["plausibility_ratio"] is not None
    ]
    return {
        "records": len(records),
        "found": len(found),
        "mean_distance": statistics.fmean(found) if found else None,
        "mean_plausibility_ratio": statistics.fmean(ratios) if ratios else None,
        "sources": {
            source: sum(1 for r in records if r["source"] == source)
            for source in ("search", "default", "none")
        },
        "mean_ec_used": statistics.fmean(r["ec_used"] for r in records) if records else None,
    }


def _write_report(records: list[dict], aggregate: dict, out_prefix: Path) -> None:
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{out_prefix}.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    _dump_json(Path(f"{out_prefix}.aggregate.json"), aggregate)


def cmd_batch(cfg: RunConfig, n: int, out: str) -> int:
    art = Artifacts(Path(cfg.artifacts))
    scorers = _scorers(cfg, art)
    records = _batch_records(cfg, art, scorers, n)
    aggregate = _aggregate(records)
    _write_report(records, aggregate, Path(out))
    print(json.dumps(aggregate, sort_keys=True))
    return 0


def cmd_ablation(cfg: RunConfig, n: int, out: str) -> int:
    art = Artifacts(Path(cfg.artifacts))
    scorers = _scorers(cfg, art)
    full_ops = frozenset(cfg.operators)
    variants = {
        "full": tuple(sorted(full_ops)),
        "no-dwb": tuple(sorted(full_ops - {"dwb_swap"})),
        "no-antonyms": tuple(sorted(full_ops - {"antonym_swap"})),
    }
    per_variant: dict[str, list[dict]] = {}
    for name, ops in variants.items():
        vcfg = dataclasses.replace(cfg, operators=ops)
        per_variant[name] = _batch_records(vcfg, art, scorers, n)

    table = {}
    base = per_variant["full"]
    for name, records in per_variant.items():
        aggregate = _aggregate(records)
        entry = {"mean_distance": aggregate["mean_distance"], "records": len(records)}
        if name != "full":
            diffs = [
                r["distance"] - b["distance"]
                for r, b in zip(records, base)
                if r["distance"] is not None and b["distance"] is not None
            ]
            if len(diffs) >= 2 and any(d != diffs[0] for d in diffs):
                mean = statistics.fmean(diffs)
                sd = statistics.stdev(diffs)
                t = mean / (sd / math.sqrt(len(diffs))) if sd > 0 else math.inf
                p = 2 * stats.t_sf(abs(t), len(diffs) - 1) if math.isfinite(t) else 0.0
            elif diffs:
                mean, t, p = statistics.fmean(diffs), math.inf, 0.0
                if mean == 0.0:
                    t, p = 0.0, 1.0
            else:
                mean, t, p = None, None, None
            entry.update({"mean_paired_diff": mean, "t_statistic": t, "p_value": p})
        table[name] = entry
        _write_report(records, aggregate, Path(f"{out}.{name}"))

    print(f"{'variant':<14}{'mean dist':<12}{'paired diff':<14}{'t':<10}p")
    for name, entry in table.items():
        mean = entry["mean_distance"]
        diff = entry.get("mean_paired_diff")
        t = entry.get("t_statistic")
        p = entry.get("p_value")
        fmt = lambda v, w: (f"{v:<{w}.4f}" if isinstance(v, float) and math.isfinite(v) else f"{str(v):<{w}}")
        print(f"{name:<14}" + fmt(mean, 12) + fmt(diff, 14) + fmt(t, 10) + (f"{p:.4g}" if isinstance(p, float) else str(p)))
    _dump_json(Path(f"{out}.comparison.json"), table)
    return 0


def cmd_anytime(cfg: RunConfig, n: int, out: str) -> int:
    art = Artifacts(Path(cfg.artifacts))
    scorers = _scorers(cfg, art)
    records = _batch_records(cfg, art, scorers, n)
    columns = {cp: [] for cp in cfg.checkpoints}
    for rec in records:
        for cp, value in rec["checkpoints"]:
            if value is not None:
                columns[cp].append(value)
    means = {
        cp: (statistics.fmean(vals) if vals else None) for cp, vals in columns.items()
    }
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(f"{out_path}.csv", "w", encoding="utf-8") as fh:
        fh.write("ec,mean_distance,runs\n")
        for cp in cfg.checkpoints:
            mean = means[cp]
            fh.write(f"{cp},{'' if mean is None else mean},{len(columns[cp])}\n")
    _dump_json(
        Path(f"{out_path}.json"),
        {"checkpoints": [[cp, means[cp]] for cp in cfg.checkpoints]},
    )
    _write_report(records, _aggregate(records), out_path)
    for cp in cfg.checkpoints:
        mean = means[cp]
        print(f"EC {cp:>6}: mean distance " + ("n/a" if mean is None else f"{mean:.4f}"))
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textcf",
        description="anytime counterfactual explanations for text classifiers",
    )
    parser.add_argument("--config", help="JSON or key=value config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--budget", type=int, help="expensive-call budget per run")
    parser.add_argument("--distance", choices=("levenshtein", "cosine", "tree"))
    parser.add_argument("--tau", type=float)
    parser.add_argument("--target", help="target class (explain)")
    parser.add_argument("--operators", type=_parse_operators)
    parser.add_argument("--deadline-ms", type=int, dest="deadline_ms")
    parser.add_argument("--remote", dest="remote_url", help="remote scorer base URL")
    parser.add_argument("--artifacts", help="artifact directory")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="train models and mine word banks")
    p.add_argument("--dataset", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--vectors", help="word-vector table (GloVe-style text file)")
    p.add_argument("--explain-n", type=int, dest="explain_n")
    p.add_argument("--vocab-cap", type=int, dest="vocab_cap")
    p.add_argument("--k", type=int, help="bank size")

    p = sub.add_parser("explain", help="explain a single text")
    p.add_argument("--text", required=True)
    p.add_argument("--target", help="target class")

    p = sub.add_parser("batch", help="explain a sampled test set")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--out", default="report")

    p = sub.add_parser("ablation", help="compare operator sets")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--out", default="ablation")

    p = sub.add_parser("anytime", help="distance as a function of budget")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--out", default="anytime")
    p.add_argument("--checkpoints", type=_parse_checkpoints)

    return parser


_FLAG_FIELDS = (
    "seed",
    "budget",
    "distance",
    "tau",
    "operators",
    "deadline_ms",
    "remote_url",
    "artifacts",
    "dataset",
    "format",
    "vectors",
    "explain_n",
    "vocab_cap",
    "k",
    "checkpoints",
)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {}
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return dataclasses.replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    if args.command == "preprocess":
        return cmd_preprocess(cfg)
    if args.command == "explain":
        if not args.target:
            raise SystemExit("explain needs --target")
        return cmd_explain(cfg, args.text, args.target)
    if args.command == "batch":
        return cmd_batch(cfg, args.n, args.out)
    if args.command == "ablation":
        return cmd_ablation(cfg, args.n, args.out)
    if args.command == "anytime":
        return cmd_anytime(cfg, args.n, args.out)
    raise SystemExit(f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
