import subprocess
import sys

import pytest
from fastapi.testclient import TestClient

from textcf_service.app import build_app
from textcf_service.config import FinetuneParams, load_jsonl_dataset
from textcf_service.finetune import finetune_all
from textcf_service.scoring import ScorerBackend
from textcf_service.tiny import build_base_checkpoints


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory):
    """The synthetic dataset shared with the search engine's test setup."""
    root = tmp_path_factory.mktemp("data")
    path = root / "dataset.jsonl"
    subprocess.run(
        [sys.executable, "-m", "textcf.demo", str(root), "--n", "160", "--seed", "7"],
        check=True,
        capture_output=True,
    )
    return path


@pytest.fixture(scope="session")
def service_config(dataset_path, tmp_path_factory):
    examples = load_jsonl_dataset(dataset_path)
    root = tmp_path_factory.mktemp("checkpoints")
    build_base_checkpoints([t for t, _ in examples], root / "base", seed=0)
    return finetune_all(examples, root / "base", root / "ckpt", FinetuneParams(seed=0))


@pytest.fixture(scope="session")
def backend(service_config):
    return ScorerBackend(service_config)


@pytest.fixture(scope="session")
def client(backend):
    return TestClient(build_app(backend))
