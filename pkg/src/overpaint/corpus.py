"""Lead sheets, 4-bar theme segments, performance windows, and the manifest.

The manifest is one JSON document (``manifest.json``) listing standards,
segments, performances, variations, and pairs; note payloads live as SMF
files in a ``midi/`` directory next to it, named by id.  Theme segments
additionally keep their beat-clock melody and chord symbols inline in the
manifest so they reload losslessly.

Manifest schema (version 1)::

    {
      "version": 1,
      "standards":    [{"id", "title"}],
      "segments":     [{"id", "leadsheet_id", "start_bar", "n_beats",
                        "notes": [{"pitch","onset","duration","velocity"}],
                        "chords": [{"start_beat","symbol"}]}],
      "performances": [{"id", "title", "standard_title", "performer"}],
      "variations":   [{"id", "performance_id", "start_s", "end_s"}],
      "pairs":        [{"id", "original_id", "variation_id", "standard_title",
                        "performer", "performance_id", "created_at",
                        "annotator"}]
    }
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
import tempfile
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .harmony import NOTE_NAMES, ChordSymbol, voice_triad
from .midifile import (
    DEFAULT_PPQ,
    NoteEvent,
    NoteSequence,
    TimingMap,
    beats_of,
    parse_midi,
    write_midi,
)
from . import analysis

BEATS_PER_BAR = 4
DEFAULT_RENDER_BPM = 120.0
DEFAULT_CHORD_VELOCITY = 64
SECTION_LABELS = ("intro", "verse", "refrain")


class CorpusError(Exception):
    """Base class for corpus/manifest failures."""


class NotFoundError(CorpusError):
    pass


class DuplicatePairError(CorpusError):
    pass


class InvalidWindowError(CorpusError):
    pass


def _check_monophonic(notes: Sequence[NoteEvent], what: str):
    ordered = sorted(notes, key=lambda n: n.onset)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.onset < prev.end - 1e-9:
            raise ValueError(f"{what} is not monophonic near beat {cur.onset}")


@dataclass
class LeadSheet:
    """A melody line with chord symbols, in the beat clock, 4/4 only."""

    id: str
    title: str
    melody: list[NoteEvent]
    chords: list[tuple[float, ChordSymbol]]
    n_bars: int
    key_hint: tuple[int, str] | None = None

    def __post_init__(self):
        self.melody = sorted(self.melody, key=lambda n: (n.onset, n.pitch))
        _check_monophonic(self.melody, f"lead sheet {self.id} melody")
        starts = [s for s, _ in self.chords]
        if starts != sorted(starts):
            raise ValueError("chords not sorted by start beat")
        if self.chords and self.chords[0][0] != 0.0:
            raise ValueError("first chord must start at beat 0")
        if self.n_bars <= 0:
            raise ValueError(f"n_bars must be positive, got {self.n_bars}")


@dataclass
class OriginalSegment:
    """A fixed-length lead-sheet window; notes keep absolute beat positions."""

    id: str
    leadsheet_id: str
    start_bar: int
    notes: list[NoteEvent]
    chords: list[tuple[float, ChordSymbol]]
    n_beats: float = 16.0

    def __post_init__(self):
        if self.start_bar < 0:
            raise ValueError(f"negative start_bar {self.start_bar}")
        if self.n_beats <= 0:
            raise ValueError(f"non-positive n_beats {self.n_beats}")
        lo = self.start_beat
        hi = lo + self.n_beats
        for n in self.notes:
            if not lo <= n.onset < hi:
                raise ValueError(
                    f"note onset {n.onset} outside window [{lo}, {hi}) of {self.id}"
                )

    @property
    def start_beat(self) -> float:
        return float(self.start_bar * BEATS_PER_BAR)


@dataclass
class VariationSegment:
    """A performance excerpt; note onsets are relative to the window start."""

    id: str
    performance_id: str
    start_s: float
    end_s: float
    notes: list[NoteEvent]

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValueError(f"window end {self.end_s} <= start {self.start_s}")
        length = self.end_s - self.start_s
        for n in self.notes:
            if n.onset < -1e-9 or n.onset >= length + 1e-9:
                raise ValueError(f"note onset {n.onset} outside window of {self.id}")

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class PairRecord:
    """Provenance link between one theme segment and one variation window."""

    id: str
    original_id: str
    variation_id: str
    standard_title: str
    performer: str
    performance_id: str
    created_at: str
    annotator: str


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    melodic: float
    harmonic: float


def trim_to_refrain(
    sheet: LeadSheet, sections: Sequence[tuple[str, int, int]]
) -> LeadSheet:
    """Keep only the final refrain's bars, rebased to bar 0."""
    for label, start, end in sections:
        if label not in SECTION_LABELS:
            raise ValueError(f"unknown section label {label!r}")
        if not 0 <= start < end:
            raise ValueError(f"bad section bounds ({start}, {end})")
    refrains = [s for s in sections if s[0] == "refrain"]
    if not refrains:
        raise ValueError("no refrain section")
    _, start_bar, end_bar = max(refrains, key=lambda s: s[1])
    lo = start_bar * BEATS_PER_BAR
    hi = end_bar * BEATS_PER_BAR
    melody = []
    for n in sheet.melody:
        if lo <= n.onset < hi:
            duration = min(n.duration, hi - n.onset)
            melody.append(replace(n, onset=n.onset - lo, duration=duration))
    chords = _slice_chords(sheet.chords, lo, hi)
    return LeadSheet(
        id=sheet.id,
        title=sheet.title,
        melody=melody,
        chords=chords,
        n_bars=end_bar - start_bar,
        key_hint=sheet.key_hint,
    )


def _slice_chords(
    chords: Sequence[tuple[float, ChordSymbol]], lo: float, hi: float
) -> list[tuple[float, ChordSymbol]]:
    """Chords covering [lo, hi), rebased to lo; the active chord is clamped."""
    active: ChordSymbol | None = None
    inside: list[tuple[float, ChordSymbol]] = []
    for start, symbol in chords:
        if start <= lo:
            active = symbol
        elif start < hi:
            inside.append((start - lo, symbol))
    out: list[tuple[float, ChordSymbol]] = []
    if active is not None:
        out.append((0.0, active))
    out.extend(inside)
    return out


def segment_leadsheet(
    sheet: LeadSheet,
    bars_per_segment: int = 4,
    keep_partial: bool = False,
    start_bars: Sequence[int] | None = None,
) -> list[OriginalSegment]:
    """Cut a lead sheet into fixed-length windows from bar 0.

    Notes are assigned by onset; one sustaining across a boundary is
    truncated there.  A trailing partial window is dropped unless
    ``keep_partial`` is set, in which case it is emitted padded to the full
    window length.  ``start_bars`` overrides the grid for manual,
    phrase-aware window placement (each window still spans
    ``bars_per_segment`` bars).
    """
    if bars_per_segment < 1:
        raise ValueError(f"bars_per_segment must be >= 1, got {bars_per_segment}")
    if not sheet.melody:
        raise ValueError(f"lead sheet {sheet.id} has an empty melody")
    if start_bars is None:
        k = sheet.n_bars // bars_per_segment
        starts = [i * bars_per_segment for i in range(k)]
        if keep_partial and sheet.n_bars % bars_per_segment:
            starts.append(k * bars_per_segment)
    else:
        starts = list(start_bars)
        if any(s < 0 for s in starts):
            raise ValueError("start_bars must be non-negative")
    n_beats = float(bars_per_segment * BEATS_PER_BAR)
    segments = []
    for start_bar in starts:
        lo = start_bar * BEATS_PER_BAR
        hi = lo + n_beats
        notes = []
        for n in sheet.melody:
            if lo <= n.onset < hi:
                notes.append(replace(n, duration=min(n.duration, hi - n.onset)))
        chords = [
            (start + lo, symbol)
            for start, symbol in _slice_chords(sheet.chords, lo, hi)
        ]
        segments.append(
            OriginalSegment(
                id=f"{sheet.id}:b{start_bar:03d}",
                leadsheet_id=sheet.id,
                start_bar=start_bar,
                notes=notes,
                chords=chords,
                n_beats=n_beats,
            )
        )
    return segments


def render_segment(
    seg: OriginalSegment,
    bpm: float = DEFAULT_RENDER_BPM,
    include_chords: bool = True,
    chord_velocity: int = DEFAULT_CHORD_VELOCITY,
) -> tuple[list[NoteEvent], float]:
    """Realize the segment in seconds at a constant tempo, rebased to 0.

    Chord symbols become sustained root-position triads voiced below the
    melody's lowest pitch.  Returns (notes, window duration in seconds).
    """
    spb = 60.0 / bpm
    base = seg.start_beat
    notes = [
        replace(n, onset=(n.onset - base) * spb, duration=n.duration * spb)
        for n in seg.notes
    ]
    if include_chords and seg.chords:
        floor_pitch = min((n.pitch for n in seg.notes), default=60)
        chord_beats = [(start - base, symbol) for start, symbol in seg.chords]
        for k, (start, symbol) in enumerate(chord_beats):
            end = chord_beats[k + 1][0] if k + 1 < len(chord_beats) else seg.n_beats
            if end <= start:
                continue
            for pitch in voice_triad(symbol, below_pitch=floor_pitch):
                notes.append(
                    NoteEvent(
                        onset=start * spb,
                        duration=(end - start) * spb,
                        pitch=pitch,
                        velocity=chord_velocity,
                    )
                )
    notes.sort(key=lambda n: (n.onset, n.pitch))
    return notes, seg.n_beats * spb


def segment_to_midi(seg: OriginalSegment, bpm: float = DEFAULT_RENDER_BPM) -> bytes:
    """SMF payload of a rendered segment (melody plus chord voicings)."""
    notes, _ = render_segment(seg, bpm=bpm)
    return write_midi(NoteSequence(notes=notes, timing=_timing_for_bpm(bpm)))


def _timing_for_bpm(bpm: float) -> TimingMap:
    return TimingMap(
        ppq=DEFAULT_PPQ, tempo_changes=[(0, round(60e6 / bpm))]
    )


def melody_of_segment(seg: OriginalSegment) -> analysis.Melody:
    """The segment's own melody in window-relative beats."""
    base = seg.start_beat
    return analysis.Melody(
        [
            analysis.MelodyNote(n.pitch, n.onset - base, n.duration)
            for n in seg.notes
        ]
    )


def _bar_chroma(
    notes: Sequence[NoteEvent],
    n_bars: int,
    bar_length: float,
    semitones: int = 0,
    time_offset: float = 0.0,
) -> np.ndarray:
    """Duration-weighted pitch-class vectors per bar; bars start at the offset."""
    chroma = np.zeros((n_bars, 12))
    for note in notes:
        pc = (note.pitch + semitones) % 12
        for bar in range(n_bars):
            lo = time_offset + bar * bar_length
            hi = lo + bar_length
            overlap = min(note.end, hi) - max(note.onset, lo)
            if overlap > 0:
                chroma[bar, pc] += overlap
    return chroma


def _chroma_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Mean per-bar cosine similarity; empty bars match empty bars."""
    sims = []
    for bar in range(a.shape[0]):
        sa = float(a[bar] @ a[bar])
        sb = float(b[bar] @ b[bar])
        if sa == 0.0 and sb == 0.0:
            sims.append(1.0)
        elif sa == 0.0 or sb == 0.0:
            sims.append(0.0)
        else:
            dot = float(a[bar] @ b[bar])
            sims.append(math.sqrt(dot * dot / (sa * sb)))
    return sum(sims) / len(sims)


def score_candidate(
    original: OriginalSegment,
    window: VariationSegment,
    transposition_invariant: bool = False,
    melodic_weight: float = 0.5,
    harmonic_weight: float = 0.5,
    bpm: float = DEFAULT_RENDER_BPM,
    deviation_cap: float = 4.0,
) -> SimilarityScore:
    """Similarity of a performance window to a rendered theme segment.

    The melodic component aligns the window's skyline against the rendered
    segment's skyline (both on the segment's beat grid) and maps the
    alignment cost into [0, 1]; the harmonic component is the mean per-bar
    cosine similarity of duration-weighted pitch-class vectors.  With
    ``transposition_invariant`` the best value over the 12 pitch-class
    rotations of the window is returned.
    """
    if not original.notes:
        raise ValueError("score_candidate: empty original segment")
    if not window.notes:
        raise ValueError("score_candidate: empty window")
    wsum = melodic_weight + harmonic_weight
    if wsum <= 0:
        raise ValueError("weights must sum to a positive value")
    rendered, duration = render_segment(original, bpm=bpm)
    spb = 60.0 / bpm
    ref_melody = analysis.Melody(
        [
            analysis.MelodyNote(n.pitch, n.onset / spb, n.duration / spb)
            for n in analysis.extract_melody_skyline(rendered).notes
        ]
    )
    n_bars = max(1, round(original.n_beats / BEATS_PER_BAR))
    ref_chroma = _bar_chroma(rendered, n_bars, BEATS_PER_BAR * spb)

    win_melody = analysis.melody_in_beats(
        window.notes, original.n_beats, (0.0, window.duration)
    )
    win_spb, win_offset = analysis.fit_beat_grid(
        [n.onset for n in window.notes], original.n_beats, (0.0, window.duration)
    )
    win_bar_length = BEATS_PER_BAR * win_spb

    best: SimilarityScore | None = None
    rotations = range(12) if transposition_invariant else (0,)
    for semitones in rotations:
        aligned = analysis.align_melodies(ref_melody, win_melody.transposed(semitones))
        denom = deviation_cap * max(len(ref_melody), len(win_melody))
        melodic = 1.0 - min(1.0, aligned.cost / denom)
        win_chroma = _bar_chroma(
            window.notes,
            n_bars,
            win_bar_length,
            semitones=semitones,
            time_offset=win_offset,
        )
        harmonic = _chroma_similarity(ref_chroma, win_chroma)
        value = (melodic_weight * melodic + harmonic_weight * harmonic) / wsum
        if best is None or value > best.value:
            best = SimilarityScore(value=value, melodic=melodic, harmonic=harmonic)
    return best


@dataclass(frozen=True)
class Candidate:
    start_s: float
    end_s: float
    score: SimilarityScore


def scan_candidates(
    original: OriginalSegment,
    performance_notes: Sequence[NoteEvent],
    performance_duration: float,
    step: float = 0.5,
    length_factors: Sequence[float] = (0.5, 0.75, 1.0, 1.25, 1.5, 2.0),
    top_k: int = 20,
    transposition_invariant: bool = False,
    bpm: float = DEFAULT_RENDER_BPM,
) -> list[Candidate]:
    """Score sliding windows over a performance, best first.

    Windows start on multiples of ``step`` with lengths scaled from the
    segment's rendered duration; empty windows are skipped.
    """
    _, primer_duration = render_segment(original, bpm=bpm)
    candidates = []
    n_steps = int(performance_duration / step) + 1
    for i in range(n_steps):
        start = i * step
        for factor in length_factors:
            end = start + primer_duration * factor
            if end > performance_duration + 1e-9:
                continue
            notes = clip_window(performance_notes, start, end)
            if not notes:
                continue
            window = VariationSegment(
                id="scan", performance_id="scan", start_s=start, end_s=end, notes=notes
            )
            score = score_candidate(
                original, window, transposition_invariant=transposition_invariant, bpm=bpm
            )
            candidates.append(Candidate(start_s=start, end_s=end, score=score))
    candidates.sort(key=lambda c: (-c.score.value, c.start_s, c.end_s))
    return candidates[:top_k]


def clip_window(
    notes: Sequence[NoteEvent], start_s: float, end_s: float
) -> list[NoteEvent]:
    """Notes with onsets inside [start_s, end_s), rebased and truncated."""
    if end_s <= start_s:
        raise InvalidWindowError(f"window end {end_s} <= start {start_s}")
    out = []
    for n in sorted(notes, key=lambda n: (n.onset, n.pitch)):
        if start_s <= n.onset < end_s:
            out.append(
                replace(
                    n,
                    onset=n.onset - start_s,
                    duration=min(n.duration, end_s - n.onset),
                )
            )
    return out


def leadsheet_from_midi(
    data: bytes,
    sheet_id: str,
    title: str,
    chords: Sequence[tuple[float, ChordSymbol]] | None = None,
    n_bars: int | None = None,
) -> LeadSheet:
    """Build a LeadSheet from SMF bytes.

    The melody is track 0 (overlaps truncated to keep it monophonic) in the
    beat clock.  Chord symbols come from ``chords`` when given; otherwise
    they are inferred from the accompaniment tracks by triad template
    matching.  Files with any non-4/4 time signature are rejected.
    """
    seq = parse_midi(data)
    for _, num, den in seq.timing.time_signatures:
        if (num, den) != (4, 4):
            raise ValueError(f"lead sheet must be entirely in 4/4, found {num}/{den}")
    melody_notes = []
    accompaniment = []
    for n in seq.notes:
        beat_note = replace(
            n,
            onset=beats_of(n.onset, seq.timing),
            duration=max(
                beats_of(n.end, seq.timing) - beats_of(n.onset, seq.timing), 1e-6
            ),
            track=n.track,
        )
        (melody_notes if n.track == 0 else accompaniment).append(beat_note)
    if not melody_notes:
        raise ValueError("lead sheet has no melody notes on track 0")
    melody_notes.sort(key=lambda n: (n.onset, -n.pitch))
    mono = []
    for n in melody_notes:
        if mono and n.onset < mono[-1].end - 1e-9:
            if n.onset <= mono[-1].onset + 1e-9:
                continue  # simultaneous lower voice: skyline keeps the top
            mono[-1] = replace(mono[-1], duration=n.onset - mono[-1].onset)
        mono.append(n)
    extent = max(n.end for n in mono + accompaniment)
    bars = n_bars if n_bars is not None else math.ceil(extent / BEATS_PER_BAR - 1e-9)
    if chords is None:
        chords = _infer_chords(accompaniment)
    return LeadSheet(
        id=sheet_id,
        title=title,
        melody=mono,
        chords=list(chords),
        n_bars=bars,
    )


def _infer_chords(
    accompaniment: Sequence[NoteEvent],
) -> list[tuple[float, ChordSymbol]]:
    """Chord symbols from accompaniment notes via the triad-label series."""
    if not accompaniment:
        return []
    series = analysis.harmonic_rhythm(accompaniment)
    out = []
    for start_beat, label in series.labels:
        if label == "N":
            continue
        name, quality = label.split(":")
        symbol = ChordSymbol(NOTE_NAMES.index(name), quality)
        if out and out[-1][1] == symbol:
            continue
        out.append((start_beat if out else 0.0, symbol))
    return out


# ---------------------------------------------------------------------------
# Manifest store
# ---------------------------------------------------------------------------

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
MIDI_DIR = "midi"


@dataclass(frozen=True)
class Performance:
    id: str
    title: str
    standard_title: str
    performer: str


def _notes_to_json(notes: Sequence[NoteEvent]) -> list[dict]:
    return [
        {"pitch": n.pitch, "onset": n.onset, "duration": n.duration, "velocity": n.velocity}
        for n in notes
    ]


def _notes_from_json(rows: Sequence[dict]) -> list[NoteEvent]:
    return [
        NoteEvent(
            onset=r["onset"], duration=r["duration"], pitch=r["pitch"], velocity=r["velocity"]
        )
        for r in rows
    ]


class CorpusStore:
    """Disk-backed corpus with a single-writer, atomically replaced manifest."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self._lock = threading.RLock()
        self.standards: dict[str, dict] = {}
        self.segments: dict[str, OriginalSegment] = {}
        self.performances: dict[str, Performance] = {}
        self.variations: dict[str, VariationSegment] = {}
        self.pairs: dict[str, PairRecord] = {}
        self._perf_cache: dict[str, NoteSequence] = {}

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def create(cls, root: str | os.PathLike) -> "CorpusStore":
        store = cls(root)
        store.root.mkdir(parents=True, exist_ok=True)
        (store.root / MIDI_DIR).mkdir(exist_ok=True)
        store._save()
        return store

    @classmethod
    def load(cls, root: str | os.PathLike) -> "CorpusStore":
        store = cls(root)
        manifest_path = store.root / MANIFEST_NAME
        if not manifest_path.exists():
            raise NotFoundError(f"no manifest at {manifest_path}")
        doc = json.loads(manifest_path.read_text())
        if doc.get("version") != MANIFEST_VERSION:
            raise CorpusError(f"unsupported manifest version {doc.get('version')}")
        for row in doc["standards"]:
            store.standards[row["id"]] = row
        for row in doc["segments"]:
            store.segments[row["id"]] = OriginalSegment(
                id=row["id"],
                leadsheet_id=row["leadsheet_id"],
                start_bar=row["start_bar"],
                notes=_notes_from_json(row["notes"]),
                chords=[
                    (c["start_beat"], ChordSymbol.parse(c["symbol"]))
                    for c in row["chords"]
                ],
                n_beats=row["n_beats"],
            )
        for row in doc["performances"]:
            store.performances[row["id"]] = Performance(**row)
        for row in doc["variations"]:
            midi_path = store._midi_path(row["id"])
            if not midi_path.exists():
                raise CorpusError(f"variation {row['id']} payload missing")
            seq = parse_midi(midi_path.read_bytes())
            store.variations[row["id"]] = VariationSegment(
                id=row["id"],
                performance_id=row["performance_id"],
                start_s=row["start_s"],
                end_s=row["end_s"],
                notes=seq.notes,
            )
        for row in doc["pairs"]:
            record = PairRecord(**row)
            store._check_pair_refs(record)
            store.pairs[record.id] = record
        return store

    def _midi_path(self, item_id: str) -> Path:
        safe = item_id.replace("/", "_").replace(":", "_")
        return self.root / MIDI_DIR / f"{safe}.mid"

    def _save(self):
        doc = {
            "version": MANIFEST_VERSION,
            "standards": list(self.standards.values()),
            "segments": [
                {
                    "id": seg.id,
                    "leadsheet_id": seg.leadsheet_id,
                    "start_bar": seg.start_bar,
                    "n_beats": seg.n_beats,
                    "notes": _notes_to_json(seg.notes),
                    "chords": [
                        {"start_beat": start, "symbol": str(symbol)}
                        for start, symbol in seg.chords
                    ],
                }
                for seg in self.segments.values()
            ],
            "performances": [vars(p).copy() for p in self.performances.values()],
            "variations": [
                {
                    "id": v.id,
                    "performance_id": v.performance_id,
                    "start_s": v.start_s,
                    "end_s": v.end_s,
                }
                for v in self.variations.values()
            ],
            "pairs": [vars(p).copy() for p in self.pairs.values()],
        }
        payload = json.dumps(doc, indent=2)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".manifest-", suffix=".json")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, self.root / MANIFEST_NAME)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    # -- registration -------------------------------------------------------

    def add_standard(self, standard_id: str, title: str):
        with self._lock:
            if standard_id in self.standards:
                raise CorpusError(f"standard {standard_id} already registered")
            self.standards[standard_id] = {"id": standard_id, "title": title}
            self._save()

    def add_segments(self, segments: Iterable[OriginalSegment]):
        with self._lock:
            segments = list(segments)
            for seg in segments:
                if seg.leadsheet_id not in self.standards:
                    raise NotFoundError(f"unknown standard {seg.leadsheet_id}")
                if seg.id in self.segments:
                    raise CorpusError(f"segment {seg.id} already registered")
            for seg in segments:
                self.segments[seg.id] = seg
                self._midi_path(seg.id).write_bytes(segment_to_midi(seg))
            self._save()

    def add_performance(
        self, performance_id: str, title: str, standard_title: str, performer: str,
        midi_bytes: bytes,
    ):
        with self._lock:
            if performance_id in self.performances:
                raise CorpusError(f"performance {performance_id} already registered")
            parse_midi(midi_bytes)  # validate before persisting
            self.performances[performance_id] = Performance(
                id=performance_id,
                title=title,
                standard_title=standard_title,
                performer=performer,
            )
            self._midi_path(performance_id).write_bytes(midi_bytes)
            self._save()

    # -- lookups --------------------------------------------------------------

    def segment(self, segment_id: str) -> OriginalSegment:
        try:
            return self.segments[segment_id]
        except KeyError:
            raise NotFoundError(f"unknown segment {segment_id}") from None

    def performance(self, performance_id: str) -> Performance:
        try:
            return self.performances[performance_id]
        except KeyError:
            raise NotFoundError(f"unknown performance {performance_id}") from None

    def performance_sequence(self, performance_id: str) -> NoteSequence:
        self.performance(performance_id)
        with self._lock:
            if performance_id not in self._perf_cache:
                data = self._midi_path(performance_id).read_bytes()
                self._perf_cache[performance_id] = parse_midi(data)
            return self._perf_cache[performance_id]

    def performance_notes(
        self,
        performance_id: str,
        start_s: float | None = None,
        end_s: float | None = None,
    ) -> list[NoteEvent]:
        seq = self.performance_sequence(performance_id)
        if start_s is None and end_s is None:
            return list(seq.notes)
        lo = 0.0 if start_s is None else start_s
        hi = seq.end_time if end_s is None else end_s
        return clip_window(seq.notes, lo, hi)

    def variation(self, variation_id: str) -> VariationSegment:
        try:
            return self.variations[variation_id]
        except KeyError:
            raise NotFoundError(f"unknown variation {variation_id}") from None

    def pair(self, pair_id: str) -> PairRecord:
        try:
            return self.pairs[pair_id]
        except KeyError:
            raise NotFoundError(f"unknown pair {pair_id}") from None

    def midi_bytes(self, item_id: str) -> bytes:
        if item_id not in (
            self.segments.keys() | self.performances.keys() | self.variations.keys()
        ):
            raise NotFoundError(f"no MIDI payload for id {item_id}")
        return self._midi_path(item_id).read_bytes()

    def standard_of_segment(self, segment_id: str) -> dict:
        seg = self.segment(segment_id)
        try:
            return self.standards[seg.leadsheet_id]
        except KeyError:
            raise NotFoundError(f"unknown standard {seg.leadsheet_id}") from None

    # -- pairs ----------------------------------------------------------------

    def _check_pair_refs(self, record: PairRecord):
        seg = self.segment(record.original_id)
        perf = self.performance(record.performance_id)
        standard = self.standards.get(seg.leadsheet_id)
        if standard is None:
            raise NotFoundError(f"unknown standard {seg.leadsheet_id}")
        if perf.standard_title != standard["title"]:
            raise CorpusError(
                f"pair {record.id} links different standards "
                f"({standard['title']!r} vs {perf.standard_title!r})"
            )
        if record.standard_title != standard["title"]:
            raise CorpusError(f"pair {record.id} carries wrong standard title")

    def save_pair(
        self,
        original_id: str,
        performance_id: str,
        start_s: float,
        end_s: float,
        annotator: str,
        created_at: str | None = None,
    ) -> PairRecord:
        """Clip the window, persist its MIDI, and append the pair atomically."""
        with self._lock:
            seg = self.segment(original_id)
            perf = self.performance(performance_id)
            if end_s <= start_s:
                raise InvalidWindowError(f"window end {end_s} <= start {start_s}")
            notes = self.performance_notes(performance_id, start_s, end_s)
            if not notes:
                raise InvalidWindowError("window contains no notes")
            variation_id = (
                f"var--{performance_id}--{round(start_s * 1000):08d}"
                f"-{round(end_s * 1000):08d}"
            )
            pair_id = f"pair--{original_id}--{variation_id}"
            if pair_id in self.pairs:
                raise DuplicatePairError(f"pair {pair_id} already saved")
            standard = self.standard_of_segment(original_id)
            variation = VariationSegment(
                id=variation_id,
                performance_id=performance_id,
                start_s=start_s,
                end_s=end_s,
                notes=notes,
            )
            record = PairRecord(
                id=pair_id,
                original_id=original_id,
                variation_id=variation_id,
                standard_title=standard["title"],
                performer=perf.performer,
                performance_id=performance_id,
                created_at=created_at
                or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                annotator=annotator,
            )
            self._check_pair_refs(record)
            midi_path = self._midi_path(variation_id)
            midi_path.write_bytes(
                write_midi(NoteSequence(notes=notes, timing=_timing_for_bpm(120.0)))
            )
            self.variations[variation_id] = variation
            self.pairs[pair_id] = record
            try:
                self._save()
            except BaseException:
                self.variations.pop(variation_id, None)
                self.pairs.pop(pair_id, None)
                midi_path.unlink(missing_ok=True)
                raise
            return record

    def delete_pair(self, pair_id: str):
        with self._lock:
            record = self.pair(pair_id)
            variation = self.variations.pop(record.variation_id, None)
            del self.pairs[pair_id]
            try:
                self._save()
            except BaseException:
                if variation is not None:
                    self.variations[record.variation_id] = variation
                self.pairs[pair_id] = record
                raise
            self._midi_path(record.variation_id).unlink(missing_ok=True)

    def summary(self) -> dict:
        """Distinct counts over the saved pairs."""
        pairs = list(self.pairs.values())
        return {
            "pairs": len(pairs),
            "standards": len({p.standard_title for p in pairs}),
            "performances": len({p.performance_id for p in pairs}),
            "pianists": len({p.performer for p in pairs}),
        }


def load_manifest(root: str | os.PathLike) -> CorpusStore:
    """Load a corpus store from its root directory (or manifest path)."""
    root = Path(root)
    if root.name == MANIFEST_NAME:
        root = root.parent
    return CorpusStore.load(root)
