import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `oracles`

from textcf import demo
from textcf.cli import Artifacts, main as cli_main


@pytest.fixture(scope="session")
def demo_paths(tmp_path_factory):
    """Synthetic planted-word dataset (500 texts) plus word vectors."""
    root = tmp_path_factory.mktemp("demo")
    examples = demo.generate_examples(n=500, seed=7)
    demo.write_jsonl(root / "dataset.jsonl", examples)
    demo.write_vectors(root / "vectors.txt", examples, seed=7)
    return {"dataset": root / "dataset.jsonl", "vectors": root / "vectors.txt"}


@pytest.fixture(scope="session")
def artifacts_dir(demo_paths, tmp_path_factory):
    out = tmp_path_factory.mktemp("artifacts")
    rc = cli_main(
        [
            "--seed", "3",
            "--artifacts", str(out),
            "preprocess",
            "--dataset", str(demo_paths["dataset"]),
        ]
    )
    assert rc == 0
    return out


@pytest.fixture(scope="session")
def bundle(artifacts_dir):
    return Artifacts(Path(artifacts_dir))


@pytest.fixture(scope="session")
def batch_records(artifacts_dir, tmp_path_factory):
    """A 200-example standard-setting batch over the synthetic dataset,
    shared by several acceptance criteria."""
    out = tmp_path_factory.mktemp("report") / "batch"
    started = time.monotonic()
    rc = cli_main(
        [
            "--seed", "11",
            "--artifacts", str(artifacts_dir),
            "--budget", "2000",
            "batch",
            "--n", "200",
            "--out", str(out),
        ]
    )
    elapsed = time.monotonic() - started
    assert rc == 0
    with open(f"{out}.jsonl", encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh]
    with open(f"{out}.aggregate.json", encoding="utf-8") as fh:
        aggregate = json.load(fh)
    return {"records": records, "aggregate": aggregate, "path": out, "elapsed": elapsed}
