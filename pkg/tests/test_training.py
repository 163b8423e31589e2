import json

import pytest
import torch

from overpaint import tokenizer
from overpaint.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from overpaint.generate import SamplingConfig, evaluate_generation, generate
from overpaint.midifile import NoteEvent
from overpaint.model import ModelConfig
from overpaint.training import (
    TrainingDivergedError,
    TrainingExample,
    build_training_example,
    examples_from_store,
    sequence_loss,
    split_examples,
    train,
)

SMALL = ModelConfig(
    layers=2, heads=2, d_model=32, d_ff=64, max_len=256, rel_window=128,
    dropout=0.0, seed=4,
)


def toy_notes(n, base_pitch=60):
    return [
        NoteEvent(onset=i * 0.2, duration=0.1, pitch=base_pitch + i, velocity=64)
        for i in range(n)
    ]


def toy_examples(count=8):
    out = []
    for k in range(count):
        out.append(
            build_training_example(
                toy_notes(3, base_pitch=50 + 3 * k),
                toy_notes(5, base_pitch=40 + 2 * k),
                max_len=256,
            )
        )
    return out


class TestBuildExample:
    def test_layout(self):
        ex = build_training_example(toy_notes(4), toy_notes(6), max_len=512)
        assert ex.tokens[0] == tokenizer.BOS
        assert ex.tokens[ex.primer_len] == tokenizer.SEP
        assert ex.tokens[-1] == tokenizer.EOS

    def test_overlong_variation_truncated_to_max_len(self):
        ex = build_training_example(toy_notes(2), toy_notes(40), max_len=64)
        assert len(ex.tokens) == 64
        assert ex.tokens[-1] == tokenizer.EOS
        assert ex.tokens[ex.primer_len] == tokenizer.SEP

    def test_overlong_primer_rejected(self):
        with pytest.raises(ValueError):
            build_training_example(toy_notes(40), toy_notes(2), max_len=32)

    def test_primer_never_truncated(self):
        primer_tokens = tokenizer.encode(toy_notes(10))
        ex = build_training_example(toy_notes(10), toy_notes(40), max_len=128)
        assert ex.tokens[1 : 1 + len(primer_tokens)] == primer_tokens


class TestSplit:
    def test_502_gives_451_51(self):
        examples = toy_examples(2) * 251
        train_set, val_set = split_examples(examples, seed=7)
        assert (len(train_set), len(val_set)) == (451, 51)

    def test_seed_reproducible_and_partition(self):
        examples = toy_examples(8)
        a = split_examples(examples, seed=1)
        b = split_examples(examples, seed=1)
        assert [id(x) for x in a[0]] == [id(x) for x in b[0]]
        assert len(a[0]) + len(a[1]) == 8


class TestTrain:
    def test_empty_training_set_rejected(self):
        with pytest.raises(ValueError):
            train([], SMALL, steps=1)

    def test_loss_decreases(self):
        examples = toy_examples(4)
        ckpt = train(examples, SMALL, steps=40, batch_size=4, lr=2e-3)
        assert ckpt.train_history[-1] < ckpt.train_history[0]
        assert ckpt.step == 40

    def test_bit_identical_across_runs(self):
        examples = toy_examples(6)
        cfg = ModelConfig(layers=2, heads=2, d_model=32, d_ff=64, max_len=256,
                          rel_window=128, dropout=0.1, seed=9)
        a = train(examples, cfg, steps=12, batch_size=4)
        b = train(examples, cfg, steps=12, batch_size=4)
        assert a.train_history == b.train_history
        assert all(torch.equal(a.state[k], b.state[k]) for k in a.state)

    def test_divergence_aborts(self):
        examples = toy_examples(4)
        with pytest.raises(TrainingDivergedError):
            train(examples, SMALL, steps=50, batch_size=4, lr=1e6, warmup_steps=1)

    def test_log_records(self):
        records = []
        train(toy_examples(4), SMALL, steps=6, batch_size=2, log=records.append,
              val_examples=toy_examples(2))
        assert [r["step"] for r in records] == list(range(1, 7))
        assert all("train_loss" in r for r in records)
        assert any("val_loss" in r for r in records)
        json.dumps(records)  # line-delimited JSON representable


class TestCheckpoint:
    def test_bit_exact_round_trip(self, tmp_path):
        ckpt = train(toy_examples(4), SMALL, steps=5, batch_size=4)
        path = tmp_path / "model.bin"
        save_checkpoint(path, ckpt)
        loaded = load_checkpoint(path)
        assert loaded.config == ckpt.config
        assert loaded.step == ckpt.step
        assert loaded.train_history == ckpt.train_history
        assert all(torch.equal(loaded.state[k], ckpt.state[k]) for k in ckpt.state)
        save_checkpoint(tmp_path / "again.bin", loaded)
        assert (tmp_path / "again.bin").read_bytes() == path.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_epoch_checkpoints_emitted(self, tmp_path):
        train(toy_examples(4), SMALL, steps=4, batch_size=2, ckpt_dir=tmp_path)
        files = sorted(tmp_path.glob("ckpt-*.bin"))
        assert len(files) == 2  # one per epoch (2 batches per epoch)


class TestGenerate:
    def test_max_new_zero_gives_empty(self):
        ckpt = train(toy_examples(4), SMALL, steps=2, batch_size=4)
        result = generate(ckpt, toy_notes(3), max_new=0)
        assert result.notes == []
        assert result.tokens == []
        assert result.empty

    def test_greedy_deterministic(self):
        ckpt = train(toy_examples(4), SMALL, steps=5, batch_size=4)
        a = generate(ckpt, toy_notes(3), max_new=32)
        b = generate(ckpt, toy_notes(3), max_new=32)
        assert a.tokens == b.tokens

    def test_seeded_sampling_deterministic(self):
        ckpt = train(toy_examples(4), SMALL, steps=5, batch_size=4)
        sampling = SamplingConfig(greedy=False, temperature=1.0, top_k=8, seed=11)
        a = generate(ckpt, toy_notes(3), max_new=32, sampling=sampling)
        b = generate(ckpt, toy_notes(3), max_new=32, sampling=sampling)
        assert a.tokens == b.tokens

    def test_overlong_primer_rejected(self):
        ckpt = train(toy_examples(4), SMALL, steps=1, batch_size=4)
        long_primer = [
            NoteEvent(onset=i * 0.2, duration=0.1, pitch=60 + (i % 12), velocity=64)
            for i in range(80)
        ]
        with pytest.raises(ValueError):
            generate(ckpt, long_primer, max_new=4)


class TestEvaluateGeneration:
    def test_identical_columns_for_same_input(self):
        notes = toy_notes(6)
        comparison = evaluate_generation(notes, notes)
        for _, original, generated in comparison.rows:
            assert original == generated

    def test_schema_rows(self):
        comparison = evaluate_generation(toy_notes(6), toy_notes(4))
        assert [r[0] for r in comparison.rows] == [
            "pitch_class_entropy",
            "pitch_range",
            "polyphony",
            "n_pitches",
            "scale_consistency",
        ]
        lines = comparison.to_csv().strip().splitlines()
        assert lines[0] == "feature,original,generated"
        assert len(lines) == 6

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            evaluate_generation([], toy_notes(3))
        with pytest.raises(ValueError):
            evaluate_generation(toy_notes(3), [])


class TestEndToEndDeterminism:
    def test_encode_train_generate_identical_bytes(self, tmp_path):
        from overpaint.midifile import NoteSequence, write_midi

        outputs = []
        for _ in range(2):
            examples = toy_examples(4)
            ckpt = train(examples, SMALL, steps=2, batch_size=4)
            result = generate(ckpt, toy_notes(3), max_new=24)
            outputs.append(write_midi(NoteSequence(notes=result.notes)))
        assert outputs[0] == outputs[1]
