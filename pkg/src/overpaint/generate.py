"""Primer-conditioned sampling and side-by-side feature comparison."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import torch

from . import analysis, tokenizer
from .checkpoint import Checkpoint
from .midifile import NoteEvent

COMPARISON_FEATURES = (
    ("pitch_class_entropy", "pitch_class_entropy"),
    ("pitch_range", "pitch_range"),
    ("polyphony", "polyphony"),
    ("n_pitches", "n_pitches"),
    ("scale_consistency", "pitch_in_scale"),
)


@dataclass
class SamplingConfig:
    greedy: bool = True
    temperature: float = 1.0
    top_k: int = 0
    seed: int = 0


@dataclass
class GenerationResult:
    notes: list[NoteEvent]
    tokens: list[int]
    warnings: int
    stopped_on_eos: bool

    @property
    def empty(self) -> bool:
        return not self.notes


def generate(
    ckpt: Checkpoint,
    primer_notes: Sequence[NoteEvent],
    max_new: int = 512,
    sampling: SamplingConfig | None = None,
) -> GenerationResult:
    """Feed BOS . primer . SEP and sample a continuation until EOS.

    Only tokens after SEP are decoded.  Greedy sampling is deterministic;
    stochastic sampling is deterministic given the sampling seed.
    """
    sampling = sampling or SamplingConfig()
    model = ckpt.build_model()
    model.eval()
    prefix = (
        [tokenizer.BOS] + tokenizer.encode(list(primer_notes)) + [tokenizer.SEP]
    )
    if len(prefix) >= ckpt.config.max_len:
        raise ValueError(
            f"primer of {len(prefix)} tokens exceeds max_len {ckpt.config.max_len}"
        )
    rng = torch.Generator().manual_seed(sampling.seed)
    tokens = list(prefix)
    generated: list[int] = []
    stopped_on_eos = False
    with torch.no_grad():
        for _ in range(max_new):
            if len(tokens) >= ckpt.config.max_len:
                break
            logits = model(torch.tensor([tokens], dtype=torch.long))[0, -1]
            if sampling.greedy:
                next_token = int(torch.argmax(logits))
            else:
                scaled = logits / max(sampling.temperature, 1e-6)
                if sampling.top_k > 0:
                    top = torch.topk(scaled, min(sampling.top_k, scaled.numel()))
                    probs = torch.zeros_like(scaled)
                    probs[top.indices] = torch.softmax(top.values, dim=-1)
                else:
                    probs = torch.softmax(scaled, dim=-1)
                next_token = int(torch.multinomial(probs, 1, generator=rng))
            if next_token == tokenizer.EOS:
                stopped_on_eos = True
                break
            tokens.append(next_token)
            generated.append(next_token)
    notes, warnings = tokenizer.decode(generated)
    return GenerationResult(
        notes=notes, tokens=generated, warnings=warnings, stopped_on_eos=stopped_on_eos
    )


@dataclass
class FeatureComparison:
    """The five metrics for a theme segment and its generated variation."""

    rows: list[tuple[str, float, float]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("feature,original,generated\n")
        for name, original, generated in self.rows:
            buf.write(f"{name},{original:.6f},{generated:.6f}\n")
        return buf.getvalue()


def evaluate_generation(
    original_notes: Sequence[NoteEvent],
    generated_notes: Sequence[NoteEvent],
    grid_step: float | None = None,
) -> FeatureComparison:
    """Side-by-side metric table for a theme and a generated variation."""
    if not original_notes:
        raise ValueError("evaluate_generation: empty original segment")
    if not generated_notes:
        raise ValueError("evaluate_generation: empty generated segment")
    a = analysis.segment_features(original_notes, grid_step)
    b = analysis.segment_features(generated_notes, grid_step)
    rows = [
        (label, a[key], b[key]) for label, key in COMPARISON_FEATURES
    ]
    return FeatureComparison(rows=rows)
