"""Fine-tuning for the scorer checkpoints.

One causal LM on the whole training split (plausibility scoring), one
masked LM per class (mask filling), and a sequence classifier. Every
product directory gets a manifest.json recording the exact hyperparameters
used.
"""

from __future__ import annotations

import json
import math
import random
from pathlib import Path

import torch
from torch.optim import AdamW
from transformers import (
    DistilBertForMaskedLM,
    DistilBertForSequenceClassification,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

from textcf_service.config import FinetuneParams

MASK_FRACTION = 0.15


def _batches(items, batch_size, rng):
    order = list(range(len(items)))
    rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        yield [items[i] for i in order[start : start + batch_size]]


def _encode(tokenizer, texts):
    return tokenizer(
        texts,
        return_tensors="pt",
        padding=True,
        truncation=True,
        max_length=tokenizer.model_max_length,
    )


def train_causal(model, tokenizer, texts, epochs, lr, weight_decay, batch_size, seed):
    torch.manual_seed(seed)
    rng = random.Random(seed)
    optimizer = AdamW(model.parameters(), lr=lr, weight_decay=weight_decay)
    model.train()
    last = math.nan
    for _ in range(epochs):
        for batch in _batches(texts, batch_size, rng):
            enc = _encode(tokenizer, batch)
            labels = enc.input_ids.clone()
            labels[enc.attention_mask == 0] = -100
            loss = model(**enc, labels=labels).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            last = float(loss.detach())
    model.eval()
    return last


def train_mlm(model, tokenizer, texts, epochs, lr, weight_decay, batch_size, seed):
    torch.manual_seed(seed)
    rng = random.Random(seed)
    generator = torch.Generator().manual_seed(seed)
    mask_id = tokenizer.mask_token_id
    special_ids = set(tokenizer.all_special_ids)
    optimizer = AdamW(model.parameters(), lr=lr, weight_decay=weight_decay)
    model.train()
    last = math.nan
    for _ in range(epochs):
        for batch in _batches(texts, batch_size, rng):
            enc = _encode(tokenizer, batch)
            input_ids = enc.input_ids.clone()
            labels = enc.input_ids.clone()
            maskable = torch.ones_like(input_ids, dtype=torch.bool)
            for special in special_ids:
                maskable &= input_ids != special
            lottery = torch.rand(input_ids.shape, generator=generator)
            chosen = maskable & (lottery < MASK_FRACTION)
            # guarantee at least one masked slot per sequence
            for row in range(input_ids.shape[0]):
                if not chosen[row].any() and maskable[row].any():
                    candidates = maskable[row].nonzero().flatten()
                    chosen[row, candidates[rng.randrange(len(candidates))]] = True
            input_ids[chosen] = mask_id
            labels[~chosen] = -100
            loss = model(
                input_ids=input_ids, attention_mask=enc.attention_mask, labels=labels
            ).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            last = float(loss.detach())
    model.eval()
    return last


def train_classifier(model, tokenizer, examples, label_index, epochs, lr, weight_decay, batch_size, seed):
    torch.manual_seed(seed)
    rng = random.Random(seed)
    optimizer = AdamW(model.parameters(), lr=lr, weight_decay=weight_decay)
    model.train()
    last = math.nan
    for _ in range(epochs):
        for batch in _batches(examples, batch_size, rng):
            enc = _encode(tokenizer, [text for text, _ in batch])
            targets = torch.tensor([label_index[label] for _, label in batch])
            loss = model(**enc, labels=targets).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            last = float(loss.detach())
    model.eval()
    return last


def _write_manifest(out_dir: Path, params: FinetuneParams, extra: dict):
    manifest = {**params.manifest(), **extra}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def finetune(
    examples: list[tuple[str, str]],
    base_dir: str | Path,
    out_dir: str | Path,
    class_id: str | None = None,
    params: FinetuneParams = FinetuneParams(),
) -> Path:
    """Fine-tune one checkpoint from the warmed-up bases.

    With `class_id`, the masked LM is tuned on that class's texts only;
    without it, the causal LM is tuned on the whole split. The product
    directory holds the weights plus a manifest of the training settings.
    """
    base_dir, out_dir = Path(base_dir), Path(out_dir)
    tokenizer = PreTrainedTokenizerFast.from_pretrained(base_dir / "tokenizer")
    if class_id is None:
        texts = [text for text, _ in examples]
        model = GPT2LMHeadModel.from_pretrained(base_dir / "base-lm")
        final_loss = train_causal(
            model, tokenizer, texts, params.epochs, params.learning_rate,
            params.weight_decay, params.batch_size, params.seed,
        )
        kind = "causal-lm"
    else:
        texts = [text for text, label in examples if label == class_id]
        if not texts:
            raise ValueError(f"no training texts for class {class_id!r}")
        model = DistilBertForMaskedLM.from_pretrained(base_dir / "base-mlm")
        final_loss = train_mlm(
            model, tokenizer, texts, params.epochs, params.learning_rate,
            params.weight_decay, params.batch_size, params.seed,
        )
        kind = "masked-lm"
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    _write_manifest(
        out_dir, params,
        {
            "kind": kind,
            "class": class_id,
            "training_texts": len(texts),
            "final_loss": final_loss,
        },
    )
    return out_dir


def finetune_classifier(
    examples: list[tuple[str, str]],
    labels: tuple[str, ...],
    base_dir: str | Path,
    out_dir: str | Path,
    params: FinetuneParams = FinetuneParams(),
) -> Path:
    """Classification head on the MLM base; the service's default black box."""
    from textcf_service.tiny import mlm_config

    base_dir, out_dir = Path(base_dir), Path(out_dir)
    tokenizer = PreTrainedTokenizerFast.from_pretrained(base_dir / "tokenizer")
    config = mlm_config(tokenizer.vocab_size)
    config.num_labels = len(labels)
    model = DistilBertForSequenceClassification(config)
    # reuse the warmed-up encoder weights
    mlm = DistilBertForMaskedLM.from_pretrained(base_dir / "base-mlm")
    model.distilbert.load_state_dict(mlm.distilbert.state_dict())
    label_index = {label: i for i, label in enumerate(labels)}
    final_loss = train_classifier(
        model, tokenizer, examples, label_index, params.epochs,
        params.learning_rate, params.weight_decay, params.batch_size, params.seed,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    _write_manifest(
        out_dir, params,
        {
            "kind": "classifier",
            "labels": list(labels),
            "training_texts": len(examples),
            "final_loss": final_loss,
        },
    )
    return out_dir


def finetune_all(
    examples: list[tuple[str, str]],
    base_dir: str | Path,
    out_root: str | Path,
    params: FinetuneParams = FinetuneParams(),
):
    """Produce every checkpoint the service needs and return its config."""
    from textcf_service.config import ServiceConfig

    out_root = Path(out_root)
    labels = []
    for _, label in examples:
        if label not in labels:
            labels.append(label)
    lm_dir = finetune(examples, base_dir, out_root / "lm", None, params)
    mlm_dirs = {
        label: finetune(examples, base_dir, out_root / f"mlm-{label}", label, params)
        for label in labels
    }
    clf_dir = finetune_classifier(
        examples, tuple(labels), base_dir, out_root / "classifier", params
    )
    # tokenizer rides along so the checkpoint tree is self-contained
    tokenizer = PreTrainedTokenizerFast.from_pretrained(Path(base_dir) / "tokenizer")
    tokenizer.save_pretrained(out_root / "tokenizer")
    config = ServiceConfig(
        labels=tuple(labels),
        classifier_path=str(clf_dir),
        lm_path=str(lm_dir),
        mlm_paths={label: str(path) for label, path in mlm_dirs.items()},
        tokenizer_path=str(out_root / "tokenizer"),
        finetune=params,
    )
    config.save(out_root / "service.json")
    return config
