import math

import pytest
import torch

from overpaint.model import (
    ModelConfig,
    RelativeSelfAttention,
    VariationTransformer,
    build_model,
)
from overpaint.training import sequence_loss

TINY = ModelConfig(
    layers=2, heads=2, d_model=8, d_ff=16, max_len=16, rel_window=8,
    dropout=0.0, seed=1, vocab_size=12,
)


class TestConfig:
    def test_head_divisibility(self):
        with pytest.raises(ValueError):
            ModelConfig(d_model=30, heads=4)

    def test_rel_window_bound(self):
        with pytest.raises(ValueError):
            ModelConfig(max_len=64, rel_window=128)

    def test_round_trip_dict(self):
        cfg = ModelConfig()
        assert ModelConfig.from_dict(cfg.to_dict()) == cfg


class TestAttention:
    def test_output_shape(self):
        cfg = ModelConfig(layers=1, heads=4, d_model=32, d_ff=64, max_len=64,
                          rel_window=32, dropout=0.0, seed=0)
        attn = RelativeSelfAttention(cfg)
        x = torch.randn(3, 10, 32)
        assert attn(x).shape == (3, 10, 32)

    def test_rows_sum_to_one_and_future_masked(self):
        cfg = ModelConfig(layers=1, heads=2, d_model=16, d_ff=32, max_len=32,
                          rel_window=16, dropout=0.0, seed=0)
        attn = RelativeSelfAttention(cfg)
        x = torch.randn(2, 12, 16)
        _, weights = attn(x, return_weights=True)
        sums = weights.sum(dim=-1)
        assert torch.allclose(sums, torch.ones_like(sums), atol=1e-6)
        assert (weights.triu(1) == 0).all()

    def test_length_over_max_rejected(self):
        attn = RelativeSelfAttention(TINY)
        with pytest.raises(ValueError):
            attn(torch.randn(1, TINY.max_len + 1, TINY.d_model))

    def test_skew_matches_direct_construction(self):
        cfg = ModelConfig(layers=1, heads=2, d_model=8, d_ff=16, max_len=16,
                          rel_window=5, dropout=0.0, seed=3)
        attn = RelativeSelfAttention(cfg)
        L, D = 9, cfg.d_model // cfg.heads
        q = torch.randn(1, cfg.heads, L, D)
        skewed = attn._relative_logits(q)
        rel = attn.rel_emb.detach()
        for h in range(cfg.heads):
            for i in range(L):
                for j in range(i + 1):
                    dist = min(i - j, cfg.rel_window - 1)
                    expect = float(q[0, h, i] @ rel[h, dist])
                    assert skewed[0, h, i, j].item() == pytest.approx(expect, abs=1e-6)


class TestModel:
    def test_forward_shape(self):
        model = build_model(TINY)
        out = model(torch.randint(0, 12, (2, 7)))
        assert out.shape == (2, 7, 12)

    def test_causal_leakage_bit_identical(self):
        cfg = ModelConfig(layers=2, heads=2, d_model=32, d_ff=64, max_len=64,
                          rel_window=64, dropout=0.0, seed=0)
        model = build_model(cfg)
        model.eval()
        tokens = torch.randint(0, cfg.vocab_size, (1, 12))
        with torch.no_grad():
            base = model(tokens)
            perturbed = tokens.clone()
            perturbed[0, 7:] = (perturbed[0, 7:] + 13) % cfg.vocab_size
            moved = model(perturbed)
        assert torch.equal(base[0, :7], moved[0, :7])

    def test_seeded_build_is_deterministic(self):
        a = build_model(TINY)
        b = build_model(TINY)
        for (_, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
            assert torch.equal(pa, pb)

    def test_initial_loss_near_uniform(self):
        cfg = ModelConfig(layers=2, heads=4, d_model=64, d_ff=128, max_len=128,
                          rel_window=64, dropout=0.0, seed=0)
        model = build_model(cfg)
        tokens = torch.randint(0, cfg.vocab_size, (4, 64))
        with torch.no_grad():
            loss = float(sequence_loss(model, tokens))
        assert abs(loss - math.log(cfg.vocab_size)) / math.log(cfg.vocab_size) < 0.05

    def test_length_over_max_rejected(self):
        model = build_model(TINY)
        with pytest.raises(ValueError):
            model(torch.randint(0, 12, (1, TINY.max_len + 1)))


class TestGradients:
    def test_analytic_gradients_match_central_differences(self):
        torch.manual_seed(0)
        model = build_model(TINY).double()
        tokens = torch.randint(0, TINY.vocab_size, (2, 5))
        loss = sequence_loss(model, tokens)
        loss.backward()
        h = 1e-5
        worst = 0.0
        for name, p in model.named_parameters():
            flat = p.data.view(-1)
            grad = p.grad.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                with torch.no_grad():
                    flat[i] = orig + h
                    up = float(sequence_loss(model, tokens))
                    flat[i] = orig - h
                    down = float(sequence_loss(model, tokens))
                    flat[i] = orig
                fd = (up - down) / (2 * h)
                a = grad[i].item()
                # combined absolute/relative error, floored at 1 for
                # near-zero gradients
                rel = abs(a - fd) / max(1.0, abs(a), abs(fd))
                worst = max(worst, rel)
        assert worst < 1e-4
