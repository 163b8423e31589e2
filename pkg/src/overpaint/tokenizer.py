"""Event codec between seconds-clock note lists and integer token streams.

Vocabulary layout (392 tokens):

    [  0..127]  NOTE_ON pitch
    [128..255]  NOTE_OFF pitch
    [256..355]  TIME_SHIFT of 10..1000 ms in 10 ms steps
    [356..387]  VELOCITY bin (32 bins of width 4)
    [388..391]  PAD, BOS, SEP, EOS

Gaps longer than one second are emitted greedily, largest bin first.  A
velocity token is emitted only when the bin changes.  Decoding is total on
arbitrary integer streams: malformed structure is repaired (stray note-offs
are dropped, open notes are closed at the end) and counted as warnings.
"""

from __future__ import annotations

from .midifile import NoteEvent

NOTE_ON_BASE = 0
NOTE_OFF_BASE = 128
TIME_SHIFT_BASE = 256
N_TIME_SHIFT = 100
VELOCITY_BASE = 356
N_VELOCITY = 32
PAD = 388
BOS = 389
SEP = 390
EOS = 391
VOCAB_SIZE = 392

TIME_STEP_S = 0.01
MIN_DURATION_S = TIME_STEP_S
VELOCITY_BIN_WIDTH = 128 // N_VELOCITY


def velocity_bin(velocity: int) -> int:
    return velocity // VELOCITY_BIN_WIDTH


def bin_velocity(bin_index: int) -> int:
    return max(1, bin_index * VELOCITY_BIN_WIDTH)


def time_shift_tokens(steps: int) -> list[int]:
    """Greedy largest-first TIME_SHIFT decomposition of a gap in 10 ms steps."""
    tokens = [TIME_SHIFT_BASE + N_TIME_SHIFT - 1] * (steps // N_TIME_SHIFT)
    remainder = steps % N_TIME_SHIFT
    if remainder:
        tokens.append(TIME_SHIFT_BASE + remainder - 1)
    return tokens


def encode(notes: list[NoteEvent]) -> list[int]:
    """Encode notes (seconds clock) as an event token stream."""
    events = []  # (step, kind, pitch, velocity); note-offs sort before note-ons
    for n in notes:
        on_step = round(n.onset / TIME_STEP_S)
        off_step = round(n.end / TIME_STEP_S)
        if off_step <= on_step:
            off_step = on_step + 1
        events.append((on_step, 1, n.pitch, n.velocity))
        events.append((off_step, 0, n.pitch, 0))
    events.sort(key=lambda e: (e[0], e[1], e[2]))

    tokens: list[int] = []
    current_step = 0
    current_bin: int | None = None
    for step, kind, pitch, velocity in events:
        if step > current_step:
            tokens.extend(time_shift_tokens(step - current_step))
            current_step = step
        if kind == 1:
            vbin = velocity_bin(velocity)
            if vbin != current_bin:
                tokens.append(VELOCITY_BASE + vbin)
                current_bin = vbin
            tokens.append(NOTE_ON_BASE + pitch)
        else:
            tokens.append(NOTE_OFF_BASE + pitch)
    return tokens


def decode(tokens: list[int]) -> tuple[list[NoteEvent], int]:
    """Decode a token stream back to notes; returns (notes, warning count).

    Total on arbitrary streams: out-of-vocabulary ids and stray note-offs
    are skipped with a warning; notes still open at EOS (or at the end of
    the stream) are closed there with a floor of one 10 ms step.
    """
    warnings = 0
    step = 0
    velocity = bin_velocity(N_VELOCITY // 2)
    open_notes: dict[int, tuple[int, int]] = {}  # pitch -> (start_step, velocity)
    notes: list[NoteEvent] = []

    def close(pitch: int, at_step: int):
        start_step, vel = open_notes.pop(pitch)
        duration = max(at_step - start_step, 1) * TIME_STEP_S
        notes.append(
            NoteEvent(
                onset=start_step * TIME_STEP_S, duration=duration, pitch=pitch,
                velocity=vel,
            )
        )

    for token in tokens:
        if token == EOS:
            break
        if NOTE_ON_BASE <= token < NOTE_ON_BASE + 128:
            pitch = token - NOTE_ON_BASE
            if pitch in open_notes:  # re-strike closes the sounding note
                close(pitch, step)
            open_notes[pitch] = (step, velocity)
        elif NOTE_OFF_BASE <= token < NOTE_OFF_BASE + 128:
            pitch = token - NOTE_OFF_BASE
            if pitch in open_notes:
                close(pitch, step)
            else:
                warnings += 1
        elif TIME_SHIFT_BASE <= token < TIME_SHIFT_BASE + N_TIME_SHIFT:
            step += token - TIME_SHIFT_BASE + 1
        elif VELOCITY_BASE <= token < VELOCITY_BASE + N_VELOCITY:
            velocity = bin_velocity(token - VELOCITY_BASE)
        elif token in (PAD, BOS, SEP):
            continue
        else:
            warnings += 1
    for pitch in sorted(open_notes):
        close(pitch, step)
    notes.sort(key=lambda n: (n.onset, n.pitch))
    return notes, warnings
