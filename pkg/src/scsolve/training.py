"""Denoising pretraining and right/wrong-option fine-tuning."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import tensorcore as tc
from .qdata import QuestionError, ScQuestion, expand
from .seq2seq import Seq2Seq
from .tokenizer import BOS, EOS, MASK, PAD, Vocab, encode, pad_batch

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 1
    max_steps: int | None = None
    mask_rate: float = 0.15
    seed: int = 0
    precision: str = "f32"
    positive_weight: bool = False  # weight positives by m-1 against class imbalance

    def __post_init__(self):
        if not 0.0 < self.mask_rate < 1.0:
            raise ValueError("mask_rate must lie in (0, 1)")
        if self.lr <= 0 or self.batch_size <= 0:
            raise ValueError("lr and batch_size must be positive")


@dataclass(frozen=True)
class PretrainExample:
    corrupted_ids: tuple[int, ...]
    original_ids: tuple[int, ...]
    corrupted_positions: tuple[int, ...]


@dataclass(frozen=True)
class FinetuneExample:
    candidate_ids: tuple[int, ...]
    label: int
    question_id: str = ""
    weight: float = 1.0


class TrainingError(RuntimeError):
    pass


def corrupt(ids: Sequence[int], mask_rate: float, rng: np.random.Generator) -> PretrainExample:
    """Independently replace non-special tokens by MASK; at least one is always masked."""
    ids = tuple(int(i) for i in ids)
    maskable = [i for i, t in enumerate(ids) if t not in (PAD, BOS, EOS)]
    if not maskable:
        raise ValueError("sequence has no maskable position")
    hits = rng.random(len(maskable)) < mask_rate
    chosen = [p for p, h in zip(maskable, hits) if h]
    if not chosen:
        chosen = [maskable[int(rng.integers(len(maskable)))]]
    corrupted = list(ids)
    for p in chosen:
        corrupted[p] = MASK
    return PretrainExample(tuple(corrupted), ids, tuple(chosen))


def pretrain_loss(model: Seq2Seq, batch: Sequence[PretrainExample]) -> tc.Tensor:
    ids, mask = pad_batch([list(ex.corrupted_ids) for ex in batch])
    states = model.forward(ids, mask)
    rows = np.concatenate([np.full(len(ex.corrupted_positions), r) for r, ex in enumerate(batch)])
    cols = np.concatenate([np.asarray(ex.corrupted_positions) for ex in batch])
    targets = np.array([ex.original_ids[c] for ex in batch for c in ex.corrupted_positions])
    picked = tc.getitem(states, (rows, cols))
    return tc.cross_entropy(model.lm_logits(picked), targets)


def finetune_loss(model: Seq2Seq, batch: Sequence[FinetuneExample]) -> tc.Tensor:
    ids, mask = pad_batch([list(ex.candidate_ids) for ex in batch])
    logits = model.option_logits(ids, mask)
    labels = np.array([ex.label for ex in batch])
    weights = np.array([ex.weight for ex in batch])
    return tc.cross_entropy(logits, labels, None if (weights == 1.0).all() else weights)


class Trainer:
    """Holds a model and its Adam state; one ``step`` is forward, backward, update."""

    def __init__(self, model: Seq2Seq, config: TrainConfig):
        self.model = model
        self.config = config
        self.state = tc.AdamState()

    def step(self, loss_fn: Callable[[Seq2Seq, Sequence], tc.Tensor], batch: Sequence) -> float:
        self.model.zero_grad()
        try:
            loss = loss_fn(self.model, batch)
        except tc.NumericError as exc:
            raise TrainingError(f"step {self.state.step + 1}: {exc}") from exc
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingError(f"step {self.state.step + 1}: non-finite loss {value}")
        loss.backward()
        grads = {n: p.grad for n, p in self.model.params.items()}
        c = self.config
        tc.adam_step(self.model.params, grads, self.state, c.lr, c.beta1, c.beta2, c.eps)
        return value

    def pretrain_step(self, batch: Sequence[PretrainExample]) -> float:
        return self.step(pretrain_loss, batch)

    def finetune_step(self, batch: Sequence[FinetuneExample]) -> float:
        return self.step(finetune_loss, batch)


def make_finetune_dataset(questions: Iterable[ScQuestion], vocab: Vocab, max_len: int | None = None,
                          positive_weight: bool = False) -> tuple[list[FinetuneExample], int]:
    """One example per option; returns (examples, number of skipped questions)."""
    out: list[FinetuneExample] = []
    skipped = 0
    for q in questions:
        if q.answer_index is None:
            skipped += 1
            continue
        try:
            cands = expand(q, strict=True)
            encoded = [encode(c.sentence, vocab, max_len) for c in cands]
        except (QuestionError, ValueError) as exc:
            log.warning("skipping question %s: %s", q.id, exc)
            skipped += 1
            continue
        pos_w = float(q.m - 1) if positive_weight else 1.0
        for c, ids in zip(cands, encoded):
            out.append(FinetuneExample(tuple(ids), int(c.label), q.id, pos_w if c.label else 1.0))
    if skipped:
        log.info("make_finetune_dataset: skipped %d question(s)", skipped)
    if not out:
        raise ValueError("no fine-tuning examples could be built")
    return out, skipped


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> Iterable[np.ndarray]:
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


@dataclass
class TrainLog:
    losses: list[float] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)

    def record(self, step: int, loss: float) -> None:
        self.losses.append(loss)
        self.lines.append(f"{step}\t{loss:.6f}")

    def note(self, step: int, text: str) -> None:
        self.lines.append(f"{step}\teval\t{text}")

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(line + "\n" for line in self.lines)


def pretrain(model: Seq2Seq, sentences: Sequence[str], vocab: Vocab, config: TrainConfig,
             log_every: int = 50) -> TrainLog:
    """Masked-token denoising over ``sentences``; masks are re-drawn every epoch."""
    rng = np.random.default_rng([config.seed, 1])
    encoded = [encode(s, vocab, model.config.max_len) for s in sentences]
    encoded = [e for e in encoded if len(e) > 2]
    if not encoded:
        raise ValueError("pretraining corpus is empty")
    trainer = Trainer(model, config)
    out = TrainLog()
    step = 0
    for epoch in range(config.epochs):
        first = len(out.losses)
        for idx in _batches(len(encoded), config.batch_size, rng):
            batch = [corrupt(encoded[i], config.mask_rate, rng) for i in idx]
            step += 1
            out.record(step, trainer.pretrain_step(batch))
            if step % log_every == 0:
                log.info("pretrain step %d loss %.4f", step, out.losses[-1])
            if config.max_steps and step >= config.max_steps:
                return out
        out.note(step, f"epoch={epoch + 1} mean_loss={np.mean(out.losses[first:]):.6f}")
    return out


def finetune(model: Seq2Seq, examples: Sequence[FinetuneExample], config: TrainConfig,
             log_every: int = 50, on_epoch: Callable[[int], str] | None = None) -> TrainLog:
    rng = np.random.default_rng([config.seed, 2])
    trainer = Trainer(model, config)
    out = TrainLog()
    step = 0
    for epoch in range(config.epochs):
        for idx in _batches(len(examples), config.batch_size, rng):
            step += 1
            out.record(step, trainer.finetune_step([examples[i] for i in idx]))
            if step % log_every == 0:
                log.info("finetune step %d loss %.4f", step, out.losses[-1])
            if config.max_steps and step >= config.max_steps:
                return out
        if on_epoch is not None:
            out.note(step, on_epoch(epoch + 1))
    return out
