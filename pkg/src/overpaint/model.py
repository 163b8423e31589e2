"""Decoder-only transformer with learned relative-position attention.

Attention logits are (QK^T + S_rel) / sqrt(d_head) where S_rel comes from
per-head embeddings of the distance into the past (0..rel_window-1, clamped)
assembled with the standard skewing construction; future positions are
masked to -inf before the softmax.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .tokenizer import VOCAB_SIZE


@dataclass
class ModelConfig:
    layers: int = 4
    heads: int = 4
    d_model: int = 256
    d_ff: int = 1024
    max_len: int = 1024
    rel_window: int = 1024
    dropout: float = 0.1
    seed: int = 0
    vocab_size: int = VOCAB_SIZE

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise ValueError(
                f"d_model {self.d_model} not divisible by heads {self.heads}"
            )
        if self.rel_window > self.max_len:
            raise ValueError(
                f"rel_window {self.rel_window} exceeds max_len {self.max_len}"
            )
        for name in ("layers", "heads", "d_model", "d_ff", "max_len", "rel_window"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


class RelativeSelfAttention(nn.Module):
    """Multi-head causal self-attention with relative position logits."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.heads = config.heads
        self.d_head = config.d_model // config.heads
        self.max_len = config.max_len
        self.rel_window = config.rel_window
        self.qkv = nn.Linear(config.d_model, 3 * config.d_model)
        self.out = nn.Linear(config.d_model, config.d_model)
        self.rel_emb = nn.Parameter(
            torch.zeros(config.heads, config.rel_window, self.d_head)
        )
        self.attn_dropout = nn.Dropout(config.dropout)

    def _relative_logits(self, q: torch.Tensor) -> torch.Tensor:
        """S_rel[i, j] = q_i . e_{i-j} for j <= i, via pad-reshape skewing."""
        B, H, L, D = q.shape
        # Column m of the gathered table corresponds to distance L-1-m.
        distances = (L - 1 - torch.arange(L, device=q.device)).clamp(
            max=self.rel_window - 1
        )
        e_hat = self.rel_emb[:, distances, :]  # (H, L, D)
        qe = torch.einsum("bhld,hmd->bhlm", q, e_hat)  # (B, H, L, L)
        padded = F.pad(qe, (1, 0))
        return padded.reshape(B, H, L + 1, L)[:, :, 1:, :]

    def forward(
        self, x: torch.Tensor, return_weights: bool = False
    ) -> torch.Tensor | tuple[torch.Tensor, torch.Tensor]:
        B, L, _ = x.shape
        if L > self.max_len:
            raise ValueError(f"sequence length {L} exceeds max_len {self.max_len}")
        qkv = self.qkv(x)
        q, k, v = qkv.chunk(3, dim=-1)
        q = q.view(B, L, self.heads, self.d_head).transpose(1, 2)
        k = k.view(B, L, self.heads, self.d_head).transpose(1, 2)
        v = v.view(B, L, self.heads, self.d_head).transpose(1, 2)

        logits = torch.matmul(q, k.transpose(-2, -1)) + self._relative_logits(q)
        logits = logits / (self.d_head**0.5)
        causal = torch.triu(
            torch.ones(L, L, dtype=torch.bool, device=x.device), diagonal=1
        )
        logits = logits.masked_fill(causal, float("-inf"))
        weights = torch.softmax(logits, dim=-1)
        attended = torch.matmul(self.attn_dropout(weights), v)
        attended = attended.transpose(1, 2).reshape(B, L, -1)
        out = self.out(attended)
        if return_weights:
            return out, weights
        return out


class TransformerBlock(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(config.d_model)
        self.attn = RelativeSelfAttention(config)
        self.ln2 = nn.LayerNorm(config.d_model)
        self.ff = nn.Sequential(
            nn.Linear(config.d_model, config.d_ff),
            nn.GELU(),
            nn.Linear(config.d_ff, config.d_model),
        )
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.dropout(self.attn(self.ln1(x)))
        x = x + self.dropout(self.ff(self.ln2(x)))
        return x


class VariationTransformer(nn.Module):
    """Token-level language model over the event vocabulary."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(config.vocab_size, config.d_model)
        self.dropout = nn.Dropout(config.dropout)
        self.blocks = nn.ModuleList(
            TransformerBlock(config) for _ in range(config.layers)
        )
        self.ln_f = nn.LayerNorm(config.d_model)
        self.head = nn.Linear(config.d_model, config.vocab_size)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.dim() != 2:
            raise ValueError(f"expected (batch, length) tokens, got {tokens.shape}")
        if tokens.shape[1] > self.config.max_len:
            raise ValueError(
                f"sequence length {tokens.shape[1]} exceeds max_len "
                f"{self.config.max_len}"
            )
        x = self.dropout(self.embed(tokens))
        for block in self.blocks:
            x = block(x)
        return self.head(self.ln_f(x))


def build_model(config: ModelConfig) -> VariationTransformer:
    """Construct and deterministically initialize a model from its config."""
    torch.manual_seed(config.seed)
    model = VariationTransformer(config)
    for module in model.modules():
        if isinstance(module, nn.Linear):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.Embedding):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
    with torch.no_grad():
        for block in model.blocks:
            block.attn.rel_emb.normal_(mean=0.0, std=0.02)
    return model
