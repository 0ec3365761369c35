"""Builders for small self-contained base checkpoints.

Deployments normally point the fine-tune script at published pretrained
models; these builders create word-level miniatures from a text corpus
instead (a few thousand parameters, CPU-friendly), which keeps development
and CI fully offline. The warm-up pass here plays the role of pretraining;
the actual fine-tuning hyperparameters live in textcf_service.finetune.
"""

from __future__ import annotations

from pathlib import Path

import torch
from tokenizers import Tokenizer, models, pre_tokenizers, processors
from transformers import (
    DistilBertConfig,
    DistilBertForMaskedLM,
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
MAX_POSITIONS = 128


def build_word_tokenizer(texts: list[str], out_dir: str | Path) -> PreTrainedTokenizerFast:
    """Whitespace word-level tokenizer over the corpus vocabulary."""
    vocab = {tok: i for i, tok in enumerate(SPECIALS)}
    for text in texts:
        for word in text.split():
            if word not in vocab:
                vocab[word] = len(vocab)
    tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tok.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        model_max_length=MAX_POSITIONS,
        pad_token="[PAD]",
        unk_token="[UNK]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    fast.save_pretrained(out_dir)
    return fast


def mlm_config(vocab_size: int) -> DistilBertConfig:
    return DistilBertConfig(
        vocab_size=vocab_size,
        dim=48,
        n_layers=2,
        n_heads=2,
        hidden_dim=96,
        max_position_embeddings=MAX_POSITIONS,
        pad_token_id=0,
    )


def lm_config(vocab_size: int) -> GPT2Config:
    return GPT2Config(
        vocab_size=vocab_size,
        n_embd=48,
        n_layer=2,
        n_head=2,
        n_positions=MAX_POSITIONS,
        bos_token_id=2,
        eos_token_id=3,
        pad_token_id=0,
    )


def build_base_checkpoints(
    texts: list[str],
    out_dir: str | Path,
    seed: int = 0,
    warmup_epochs: int = 8,
    warmup_lr: float = 1e-3,
):
    """Create tokenizer + warmed-up MLM and causal-LM bases under out_dir.

    The warm-up stands in for large-scale pretraining so that the
    paper-parameter fine-tuning afterwards starts from a sensible model.
    """
    from textcf_service import finetune  # local import to avoid a cycle

    out_dir = Path(out_dir)
    tokenizer = build_word_tokenizer(texts, out_dir / "tokenizer")
    torch.manual_seed(seed)

    mlm = DistilBertForMaskedLM(mlm_config(tokenizer.vocab_size))
    finetune.train_mlm(mlm, tokenizer, texts, epochs=warmup_epochs, lr=warmup_lr,
                       weight_decay=0.0, batch_size=8, seed=seed)
    mlm.save_pretrained(out_dir / "base-mlm")

    lm = GPT2LMHeadModel(lm_config(tokenizer.vocab_size))
    finetune.train_causal(lm, tokenizer, texts, epochs=warmup_epochs, lr=warmup_lr,
                          weight_decay=0.0, batch_size=8, seed=seed)
    lm.save_pretrained(out_dir / "base-lm")

    return {
        "tokenizer": out_dir / "tokenizer",
        "mlm": out_dir / "base-mlm",
        "lm": out_dir / "base-lm",
    }
