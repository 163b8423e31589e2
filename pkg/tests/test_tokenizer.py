import random

import pytest

from overpaint import tokenizer
from overpaint.midifile import NoteEvent
from overpaint.tokenizer import (
    BOS,
    EOS,
    NOTE_OFF_BASE,
    NOTE_ON_BASE,
    PAD,
    SEP,
    TIME_SHIFT_BASE,
    VELOCITY_BASE,
    VOCAB_SIZE,
    decode,
    encode,
    time_shift_tokens,
)

from conftest import grid_notes


class TestVocabulary:
    def test_size(self):
        assert VOCAB_SIZE == 392
        assert EOS == 391

    def test_ranges_disjoint(self):
        assert NOTE_OFF_BASE == NOTE_ON_BASE + 128
        assert TIME_SHIFT_BASE == NOTE_OFF_BASE + 128
        assert VELOCITY_BASE == TIME_SHIFT_BASE + 100
        assert PAD == VELOCITY_BASE + 32
        assert (PAD, BOS, SEP, EOS) == (388, 389, 390, 391)


class TestEncode:
    def test_empty(self):
        assert encode([]) == []

    def test_single_note_hand_case(self):
        tokens = encode([NoteEvent(0.0, 0.5, 60, 64)])
        assert tokens == [
            VELOCITY_BASE + 16,       # floor(64 / 4)
            NOTE_ON_BASE + 60,
            TIME_SHIFT_BASE + 50 - 1,  # 500 ms
            NOTE_OFF_BASE + 60,
        ]

    def test_gap_greedy_decomposition(self):
        assert time_shift_tokens(150) == [
            TIME_SHIFT_BASE + 100 - 1,
            TIME_SHIFT_BASE + 50 - 1,
        ]
        tokens = encode(
            [NoteEvent(0.0, 0.1, 60, 64), NoteEvent(1.6, 0.1, 62, 64)]
        )
        shifts = [t for t in tokens if TIME_SHIFT_BASE <= t < VELOCITY_BASE]
        # off-gap 0.1s, gap 1.5s as 100+50, then the second note's 0.1s
        assert shifts == [
            TIME_SHIFT_BASE + 10 - 1,
            TIME_SHIFT_BASE + 100 - 1,
            TIME_SHIFT_BASE + 50 - 1,
            TIME_SHIFT_BASE + 10 - 1,
        ]

    def test_velocity_emitted_only_on_change(self):
        notes = [
            NoteEvent(0.0, 0.1, 60, 64),
            NoteEvent(0.2, 0.1, 62, 64),
            NoteEvent(0.4, 0.1, 64, 32),
        ]
        tokens = encode(notes)
        vels = [t for t in tokens if VELOCITY_BASE <= t < PAD]
        assert vels == [VELOCITY_BASE + 16, VELOCITY_BASE + 8]

    def test_deterministic(self, rng):
        notes = grid_notes(rng, 30)
        assert encode(notes) == encode(notes)


class TestDecode:
    def test_round_trip_on_grid(self):
        rng = random.Random(21)
        for _ in range(300):
            notes = grid_notes(rng, rng.randrange(0, 40))
            back, warnings = decode(encode(notes))
            assert warnings == 0
            assert back == notes

    def test_unclosed_note_closed_at_eos(self):
        notes, warnings = decode([NOTE_ON_BASE + 60, EOS])
        assert len(notes) == 1
        assert notes[0].duration == pytest.approx(0.01)
        assert warnings == 0

    def test_stray_off_ignored_with_warning(self):
        notes, warnings = decode([NOTE_OFF_BASE + 60])
        assert notes == []
        assert warnings == 1

    def test_tokens_after_eos_ignored(self):
        notes, _ = decode([NOTE_ON_BASE + 60, EOS, NOTE_ON_BASE + 62])
        assert [n.pitch for n in notes] == [60]

    def test_out_of_vocab_counted(self):
        notes, warnings = decode([-5, 9999, NOTE_ON_BASE + 60, EOS])
        assert warnings == 2
        assert len(notes) == 1

    def test_total_on_random_streams(self):
        rng = random.Random(22)
        for _ in range(500):
            stream = [rng.randrange(-10, 500) for _ in range(rng.randrange(0, 80))]
            notes, warnings = decode(stream)
            assert warnings >= 0
            for n in notes:
                assert n.duration > 0
                assert 1 <= n.velocity <= 127

    def test_restrike_closes_previous(self):
        stream = [
            NOTE_ON_BASE + 60,
            TIME_SHIFT_BASE + 49,  # 500 ms
            NOTE_ON_BASE + 60,
            TIME_SHIFT_BASE + 49,
            NOTE_OFF_BASE + 60,
        ]
        notes, warnings = decode(stream)
        assert [(n.onset, n.duration) for n in notes] == [(0.0, 0.5), (0.5, 0.5)]
        assert warnings == 0
