"""Chord symbols, triad templates, and voicing helpers."""

from __future__ import annotations

import re
from dataclasses import dataclass

NOTE_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
_NAME_TO_PC = {
    "C": 0, "C#": 1, "Db": 1, "D": 2, "D#": 3, "Eb": 3, "E": 4, "F": 5,
    "F#": 6, "Gb": 6, "G": 7, "G#": 8, "Ab": 8, "A": 9, "A#": 10, "Bb": 10,
    "B": 11,
}

TRIAD_INTERVALS = {"maj": (0, 4, 7), "min": (0, 3, 7)}

_SYMBOL_RE = re.compile(r"^([A-G][#b]?)(.*)$")


@dataclass(frozen=True)
class ChordSymbol:
    """A major or minor triad rooted on a pitch class.

    Richer symbols ("Cmaj7", "Dm9", "G7") are folded down to their triad;
    diminished maps to minor and augmented to major.
    """

    root_pc: int
    quality: str  # "maj" or "min"

    def __post_init__(self):
        if not 0 <= self.root_pc <= 11:
            raise ValueError(f"root pitch class {self.root_pc} outside 0..11")
        if self.quality not in TRIAD_INTERVALS:
            raise ValueError(f"unknown quality {self.quality!r}")

    @classmethod
    def parse(cls, text: str) -> "ChordSymbol":
        m = _SYMBOL_RE.match(text.strip())
        if not m:
            raise ValueError(f"unparseable chord symbol {text!r}")
        root, rest = m.groups()
        rest = rest.strip()
        lowered = rest.lower()
        if lowered.startswith("maj") or lowered.startswith("aug") or lowered.startswith("+"):
            quality = "maj"
        elif lowered.startswith("dim") or lowered.startswith("m") or lowered.startswith("-") or lowered.startswith("min"):
            quality = "min"
        else:
            quality = "maj"
        return cls(root_pc=_NAME_TO_PC[root], quality=quality)

    @property
    def pitch_classes(self) -> tuple[int, ...]:
        return tuple((self.root_pc + i) % 12 for i in TRIAD_INTERVALS[self.quality])

    @property
    def label(self) -> str:
        return f"{NOTE_NAMES[self.root_pc]}:{self.quality}"

    def transposed(self, semitones: int) -> "ChordSymbol":
        return ChordSymbol((self.root_pc + semitones) % 12, self.quality)

    def __str__(self) -> str:
        suffix = "m" if self.quality == "min" else ""
        return f"{NOTE_NAMES[self.root_pc]}{suffix}"


def triad_templates() -> list[tuple[str, tuple[int, ...]]]:
    """The 24 major/minor triad templates as (label, pitch-class tuple)."""
    templates = []
    for root in range(12):
        for quality in ("maj", "min"):
            sym = ChordSymbol(root, quality)
            templates.append((sym.label, sym.pitch_classes))
    return templates


def voice_triad(symbol: ChordSymbol, below_pitch: int | None = None) -> tuple[int, ...]:
    """Root-position triad pitches, dropped by octaves to stay below a melody.

    Defaults to a root near C3.  When ``below_pitch`` is given, the voicing
    is lowered until its top note sits under it (stopping at the bottom of
    the keyboard for pathologically low melodies).
    """
    root = symbol.root_pc + 36
    if below_pitch is not None:
        while root + 7 >= below_pitch and root >= 12:
            root -= 12
    intervals = TRIAD_INTERVALS[symbol.quality]
    return tuple(root + i for i in intervals)
