import random

import pytest

from overpaint.midifile import NoteEvent, NoteSequence, TimingMap


def random_timing(rng: random.Random) -> TimingMap:
    ppq = rng.choice((96, 240, 480, 960))
    tempos = [(0, rng.randrange(200_000, 1_200_000))]
    tick = 0
    for _ in range(rng.randrange(0, 3)):
        tick += rng.randrange(1, 4) * ppq
        tempos.append((tick, rng.randrange(200_000, 1_200_000)))
    return TimingMap(ppq=ppq, tempo_changes=tempos)


def random_sequence(rng: random.Random, max_notes: int = 30) -> NoteSequence:
    """A random valid sequence in the writer's domain.

    Pitches are drawn without replacement: the parser resolves same-pitch
    overlaps (last-on wins), so sequences carrying them are not
    writer-faithful.
    """
    timing = random_timing(rng)
    n = rng.randrange(0, max_notes)
    pitches = rng.sample(range(128), n)
    notes = [
        NoteEvent(
            onset=rng.uniform(0.0, 20.0),
            duration=rng.uniform(0.05, 3.0),
            pitch=pitch,
            velocity=rng.randrange(1, 128),
        )
        for pitch in pitches
    ]
    return NoteSequence(notes=notes, timing=timing)


GRID_STEP = 1 / 24


def random_beat_notes(
    rng: random.Random,
    n_notes: int,
    max_beats: float = 16.0,
    pitch_lo: int = 36,
    pitch_hi: int = 96,
) -> list[NoteEvent]:
    """Notes on the 1/24-beat sampling lattice (times built as k * (1/24))."""
    notes = []
    max_steps = int(max_beats * 24)
    for _ in range(n_notes):
        start = rng.randrange(0, max_steps - 1)
        dur = min(rng.randrange(1, 49), max_steps - start)
        notes.append(
            NoteEvent(
                onset=start * GRID_STEP,
                duration=dur * GRID_STEP,
                pitch=rng.randrange(pitch_lo, pitch_hi),
                velocity=rng.randrange(1, 128),
            )
        )
    return sorted(notes, key=lambda n: (n.onset, n.pitch))


def grid_notes(rng: random.Random, n_notes: int, max_steps: int = 500) -> list[NoteEvent]:
    """Codec-grid notes: 10 ms times, velocities on the 4-step bins,
    non-overlapping per pitch."""
    last_end: dict[int, int] = {}
    notes = []
    for _ in range(n_notes):
        pitch = rng.randrange(0, 128)
        start = max(last_end.get(pitch, 0), rng.randrange(0, max_steps))
        dur = rng.randrange(1, 100)
        last_end[pitch] = start + dur
        velocity = rng.choice([1] + [4 * k for k in range(1, 32)])
        notes.append(
            NoteEvent(
                onset=start * 0.01, duration=dur * 0.01, pitch=pitch, velocity=velocity
            )
        )
    return sorted(notes, key=lambda n: (n.onset, n.pitch))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
