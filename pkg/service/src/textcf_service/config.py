"""Service configuration: which checkpoints serve which scorer role, and the
fine-tuning hyperparameters recorded in every checkpoint manifest."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path


@dataclasses.dataclass(frozen=True)
class FinetuneParams:
    epochs: int = 3
    learning_rate: float = 5e-05
    weight_decay: float = 0.0
    batch_size: int = 2
    seed: int = 0

    def manifest(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "optimizer": "AdamW",
        }


@dataclasses.dataclass
class ServiceConfig:
    """Checkpoint layout for one deployment.

    `mlm_paths` must name one masked-LM checkpoint per class; the embedder
    defaults to mean-pooled hidden states of the causal LM when no dedicated
    checkpoint is configured.
    """

    labels: tuple[str, ...]
    classifier_path: str
    lm_path: str
    mlm_paths: dict[str, str]
    tokenizer_path: str | None = None  # defaults to <lm_path>/../tokenizer
    embedder_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8008
    finetune: FinetuneParams = dataclasses.field(default_factory=FinetuneParams)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        if len(self.labels) < 2:
            raise ValueError("need at least two class labels")
        if set(self.mlm_paths) != set(self.labels):
            raise ValueError(
                f"need exactly one MLM checkpoint per class; have "
                f"{sorted(self.mlm_paths)} for classes {sorted(self.labels)}"
            )

    @classmethod
    def from_json(cls, path: str | Path) -> "ServiceConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        finetune = FinetuneParams(**data.pop("finetune", {}))
        return cls(finetune=finetune, **data)

    def resolved_tokenizer_path(self) -> Path:
        if self.tokenizer_path is not None:
            return Path(self.tokenizer_path)
        return Path(self.lm_path).parent / "tokenizer"

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "classifier_path": str(self.classifier_path),
            "lm_path": str(self.lm_path),
            "mlm_paths": {k: str(v) for k, v in self.mlm_paths.items()},
            "tokenizer_path": None if self.tokenizer_path is None else str(self.tokenizer_path),
            "embedder_path": None if self.embedder_path is None else str(self.embedder_path),
            "host": self.host,
            "port": self.port,
            "finetune": dataclasses.asdict(self.finetune),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def load_jsonl_dataset(path: str | Path) -> list[tuple[str, str]]:
    """Read the shared dataset format: JSON lines with text and label."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            out.append((str(record["text"]), str(record["label"])))
    if not out:
        raise ValueError(f"{path}: empty dataset")
    return out
