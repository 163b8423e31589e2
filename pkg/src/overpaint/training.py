"""Training-example assembly and the seeded training loop."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import torch
import torch.nn.functional as F

from . import tokenizer
from .checkpoint import Checkpoint, save_checkpoint
from .corpus import CorpusStore, render_segment
from .midifile import NoteEvent
from .model import ModelConfig, build_model

TRAIN_FRACTION = 0.9


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class TrainingExample:
    """BOS . theme tokens . SEP . variation tokens . EOS."""

    tokens: list[int]
    primer_len: int  # index of the SEP token

    def __post_init__(self):
        if self.tokens[self.primer_len] != tokenizer.SEP:
            raise ValueError("primer_len does not point at the SEP token")


def build_training_example(
    original_notes: Sequence[NoteEvent],
    variation_notes: Sequence[NoteEvent],
    max_len: int = 1024,
) -> TrainingExample:
    """Concatenate encoded theme and variation; truncate only the variation.

    When the sequence overflows ``max_len`` the variation tail is cut so the
    total length is exactly ``max_len`` with EOS last.  A primer that leaves
    no room even for EOS makes the pair unusable.
    """
    o_tokens = tokenizer.encode(list(original_notes))
    v_tokens = tokenizer.encode(list(variation_notes))
    base_len = 1 + len(o_tokens) + 1  # BOS + primer + SEP
    if base_len + 1 > max_len:
        raise ValueError(
            f"primer of {len(o_tokens)} tokens leaves no room in max_len {max_len}"
        )
    room = max_len - base_len - 1
    if len(v_tokens) > room:
        v_tokens = v_tokens[:room]
    tokens = [tokenizer.BOS] + o_tokens + [tokenizer.SEP] + v_tokens + [tokenizer.EOS]
    return TrainingExample(tokens=tokens, primer_len=1 + len(o_tokens))


def examples_from_store(
    store: CorpusStore, max_len: int = 1024, bpm: float = 120.0
) -> list[TrainingExample]:
    """One example per saved pair, themes rendered at the given tempo."""
    examples = []
    for record in store.pairs.values():
        seg = store.segment(record.original_id)
        variation = store.variation(record.variation_id)
        rendered, _ = render_segment(seg, bpm=bpm)
        examples.append(
            build_training_example(rendered, variation.notes, max_len=max_len)
        )
    return examples


def split_examples(
    examples: Sequence[TrainingExample], seed: int
) -> tuple[list[TrainingExample], list[TrainingExample]]:
    """Seeded shuffle, then train = floor(0.9 * N), validation = the rest."""
    order = list(range(len(examples)))
    random.Random(seed).shuffle(order)
    n_train = math.floor(TRAIN_FRACTION * len(examples))
    return (
        [examples[i] for i in order[:n_train]],
        [examples[i] for i in order[n_train:]],
    )


def _batch_tensor(batch: Sequence[TrainingExample]) -> torch.Tensor:
    width = max(len(ex.tokens) for ex in batch)
    out = torch.full((len(batch), width), tokenizer.PAD, dtype=torch.long)
    for row, ex in enumerate(batch):
        out[row, : len(ex.tokens)] = torch.tensor(ex.tokens, dtype=torch.long)
    return out


def sequence_loss(model, tokens: torch.Tensor) -> torch.Tensor:
    """Teacher-forced next-token cross-entropy; PAD targets are ignored."""
    logits = model(tokens[:, :-1])
    targets = tokens[:, 1:]
    return F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        targets.reshape(-1),
        ignore_index=tokenizer.PAD,
    )


def evaluate_loss(model, examples: Sequence[TrainingExample]) -> float:
    model.eval()
    with torch.no_grad():
        loss = sequence_loss(model, _batch_tensor(examples))
    model.train()
    return float(loss)


def train(
    examples: Sequence[TrainingExample],
    config: ModelConfig,
    steps: int,
    batch_size: int = 8,
    lr: float = 1e-3,
    warmup_steps: int = 100,
    val_examples: Sequence[TrainingExample] | None = None,
    log: Callable[[dict], None] | None = None,
    ckpt_dir: str | Path | None = None,
) -> Checkpoint:
    """Train a model from scratch; fully deterministic given config.seed.

    Emits one log record per step ({step, train_loss} plus val_loss at epoch
    boundaries) and a checkpoint per epoch when ``ckpt_dir`` is given.
    Raises TrainingDivergedError if the loss goes non-finite.
    """
    if not examples:
        raise ValueError("train: empty training set")
    if steps <= 0:
        raise ValueError(f"train: steps must be positive, got {steps}")
    model = build_model(config)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    schedule = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: min(1.0, (step + 1) / max(1, warmup_steps))
    )
    shuffler = random.Random(config.seed)
    order: list[int] = []
    train_history: list[float] = []
    val_history: list[tuple[int, float]] = []

    step = 0
    while step < steps:
        if not order:
            order = list(range(len(examples)))
            shuffler.shuffle(order)
        batch_ids, order = order[:batch_size], order[batch_size:]
        batch = _batch_tensor([examples[i] for i in batch_ids])
        optimizer.zero_grad()
        loss = sequence_loss(model, batch)
        loss_value = float(loss.detach())
        if not math.isfinite(loss_value):
            raise TrainingDivergedError(f"non-finite loss at step {step}")
        loss.backward()
        optimizer.step()
        schedule.step()
        train_history.append(loss_value)
        step += 1
        record = {"step": step, "train_loss": loss_value}
        epoch_end = not order
        if epoch_end or step == steps:
            if val_examples:
                val_loss = evaluate_loss(model, val_examples)
                val_history.append((step, val_loss))
                record["val_loss"] = val_loss
            if ckpt_dir is not None and epoch_end:
                ckpt = Checkpoint(
                    config=config,
                    state={k: v.clone() for k, v in model.state_dict().items()},
                    step=step,
                    train_history=list(train_history),
                    val_history=list(val_history),
                )
                save_checkpoint(Path(ckpt_dir) / f"ckpt-{step:06d}.bin", ckpt)
        if log is not None:
            log(record)

    return Checkpoint(
        config=config,
        state={k: v.clone() for k, v in model.state_dict().items()},
        step=step,
        train_history=train_history,
        val_history=val_history,
    )
