"""Symbolic feature metrics, melody alignment, and harmonic-rhythm analysis.

The five segment metrics are pitch-class entropy, pitch range, polyphony,
number of distinct pitches, and pitch-in-scale rate.  Melody comparison uses
global (Needleman-Wunsch) alignment over pitch-class and duration deviation,
aggregated into an average-deviation score that excludes gapped notes.
"""

from __future__ import annotations

import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .harmony import triad_templates
from .midifile import NoteEvent

POLYPHONY_GRID_DIVISIONS = 24  # grid points per beat; resolves 32nd triplets
SKYLINE_CLUSTER_WINDOW = 0.05  # onsets this close form one cluster
DEFAULT_GAP_PENALTY = 2.0
CHORD_MATCH_THRESHOLD = 0.5

FEATURE_NAMES = (
    "pitch_class_entropy",
    "pitch_range",
    "polyphony",
    "n_pitches",
    "pitch_in_scale",
)

MAJOR_SCALE_STEPS = (0, 2, 4, 5, 7, 9, 11)


def _require_notes(notes: Sequence[NoteEvent], op: str):
    if not notes:
        raise ValueError(f"{op}: empty segment")


def pitch_class_entropy(notes: Sequence[NoteEvent]) -> float:
    """Shannon entropy (bits) of the note-count pitch-class distribution."""
    _require_notes(notes, "pitch_class_entropy")
    counts = Counter(n.pitch % 12 for n in notes)
    total = len(notes)
    return -sum((c / total) * math.log2(c / total) for c in counts.values()) + 0.0


def pitch_range(notes: Sequence[NoteEvent]) -> int:
    """Highest minus lowest MIDI pitch."""
    _require_notes(notes, "pitch_range")
    pitches = [n.pitch for n in notes]
    return max(pitches) - min(pitches)


def polyphony(notes: Sequence[NoteEvent], grid_step: float | None = None) -> float:
    """Mean sounding-note count over grid points where at least one sounds.

    The grid runs from time 0 with step ``grid_step`` (default 1/24 of the
    segment's clock unit) up to the last note end; a note sounds at t when
    onset <= t < onset + duration.
    """
    _require_notes(notes, "polyphony")
    step = (1.0 / POLYPHONY_GRID_DIVISIONS) if grid_step is None else grid_step
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    onsets = np.array([n.onset for n in notes])
    ends = np.array([n.end for n in notes])
    t_end = float(ends.max())
    # The grid is exactly {k*step : k*step < t_end}; adjust the count so the
    # membership rule is the float comparison itself, not a rounded quotient.
    n_points = max(1, math.ceil(t_end / step))
    while n_points * step < t_end:
        n_points += 1
    while n_points > 1 and (n_points - 1) * step >= t_end:
        n_points -= 1
    ts = np.arange(n_points) * step
    counts = ((onsets[:, None] <= ts[None, :]) & (ts[None, :] < ends[:, None])).sum(axis=0)
    sounding = counts[counts >= 1]
    if sounding.size == 0:
        raise ValueError("polyphony: no grid point with a sounding note")
    return float(sounding.mean())


def n_pitches(notes: Sequence[NoteEvent]) -> int:
    """Count of distinct MIDI pitch numbers (octaves distinct)."""
    _require_notes(notes, "n_pitches")
    return len({n.pitch for n in notes})


def major_scale(root_pc: int) -> frozenset[int]:
    return frozenset((root_pc + s) % 12 for s in MAJOR_SCALE_STEPS)


def pitch_in_scale(
    notes: Sequence[NoteEvent], scale: Iterable[int] | None = None
) -> float:
    """Fraction of notes whose pitch class lies in a scale.

    With no scale given, returns the maximum fraction over the 12 major
    scales (the best-fit convention).
    """
    _require_notes(notes, "pitch_in_scale")
    classes = [n.pitch % 12 for n in notes]
    if scale is not None:
        scale_set = frozenset(scale)
        if len(scale_set) != 7:
            raise ValueError(f"scale must have 7 pitch classes, got {len(scale_set)}")
        return sum(pc in scale_set for pc in classes) / len(classes)
    return max(
        sum(pc in major_scale(root) for pc in classes) / len(classes)
        for root in range(12)
    )


def segment_features(
    notes: Sequence[NoteEvent],
    grid_step: float | None = None,
    scale: Iterable[int] | None = None,
) -> dict[str, float]:
    """All five metrics for one segment, keyed by FEATURE_NAMES."""
    return {
        "pitch_class_entropy": pitch_class_entropy(notes),
        "pitch_range": float(pitch_range(notes)),
        "polyphony": polyphony(notes, grid_step),
        "n_pitches": float(n_pitches(notes)),
        "pitch_in_scale": pitch_in_scale(notes, scale),
    }


@dataclass
class FeatureReport:
    """Per-segment metric values plus population mean/sd per feature."""

    per_segment: dict[str, dict[str, float]]
    aggregate: dict[str, tuple[float, float]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("segment_id,entropy,range,polyphony,n_pitches,in_scale\n")
        for seg_id, feats in self.per_segment.items():
            row = ",".join(f"{feats[name]:.6f}" for name in FEATURE_NAMES)
            buf.write(f"{seg_id},{row}\n")
        for label, idx in (("__mean__", 0), ("__sd__", 1)):
            row = ",".join(f"{self.aggregate[name][idx]:.6f}" for name in FEATURE_NAMES)
            buf.write(f"{label},{row}\n")
        return buf.getvalue()


def corpus_stats(
    segments: Mapping[str, Sequence[NoteEvent]], grid_step: float | None = None
) -> FeatureReport:
    """Five metrics per segment plus (mean, population sd) per feature."""
    if not segments:
        raise ValueError("corpus_stats: empty group")
    per_segment = {
        seg_id: segment_features(notes, grid_step) for seg_id, notes in segments.items()
    }
    aggregate = {}
    for name in FEATURE_NAMES:
        values = np.array([feats[name] for feats in per_segment.values()])
        aggregate[name] = (float(values.mean()), float(values.std()))
    return FeatureReport(per_segment=per_segment, aggregate=aggregate)


@dataclass(frozen=True)
class MelodyNote:
    """One melody note; times in beats."""

    pitch: int
    onset: float
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"non-positive duration {self.duration}")

    @property
    def pitch_class(self) -> int:
        return self.pitch % 12


@dataclass
class Melody:
    """An ordered monophonic line."""

    notes: list[MelodyNote]

    def __post_init__(self):
        for prev, cur in zip(self.notes, self.notes[1:]):
            if cur.onset < prev.onset:
                raise ValueError("melody notes not sorted by onset")
            if cur.onset < prev.onset + prev.duration - 1e-9:
                raise ValueError("melody is not monophonic")

    def __len__(self) -> int:
        return len(self.notes)

    def transposed(self, semitones: int) -> "Melody":
        return Melody(
            [
                MelodyNote(n.pitch + semitones, n.onset, n.duration)
                for n in self.notes
            ]
        )


def note_deviation(a: MelodyNote, b: MelodyNote) -> tuple[float, float]:
    """(circular pitch-class distance, absolute duration difference)."""
    d = abs(a.pitch_class - b.pitch_class)
    return float(min(d, 12 - d)), abs(a.duration - b.duration)


def _substitution_costs(a: "Melody", b: "Melody") -> np.ndarray:
    """Pairwise pc_dev + dur_dev matrix, shape (len(a), len(b))."""
    pcs_a = np.array([n.pitch % 12 for n in a.notes])
    pcs_b = np.array([n.pitch % 12 for n in b.notes])
    durs_a = np.array([n.duration for n in a.notes])
    durs_b = np.array([n.duration for n in b.notes])
    d = np.abs(pcs_a[:, None] - pcs_b[None, :])
    pc_cost = np.minimum(d, 12 - d).astype(float)
    return pc_cost + np.abs(durs_a[:, None] - durs_b[None, :])


@dataclass
class AlignmentResult:
    """Global alignment; pairs hold note indices or None for a gap."""

    pairs: list[tuple[int | None, int | None]]
    cost: float
    n_aligned: int


def align_melodies(
    a: Melody, b: Melody, gap_penalty: float = DEFAULT_GAP_PENALTY
) -> AlignmentResult:
    """Minimum-cost global alignment of two melodies.

    Substitution cost is pitch-class deviation plus duration deviation; each
    gapped note costs ``gap_penalty``.  Ties prefer a match, then a gap on
    b's side, then a gap on a's side.  The backtrack runs in a canonical
    argument order (mirrored on return) so that swapping the inputs always
    yields the mirrored alignment even when several optima tie.
    """
    n, m = len(a), len(b)
    if n == 0 and m == 0:
        raise ValueError("align_melodies: both melodies empty")
    key_a = [(x.pitch, x.onset, x.duration) for x in a.notes]
    key_b = [(x.pitch, x.onset, x.duration) for x in b.notes]
    if key_b < key_a:
        mirrored = align_melodies(b, a, gap_penalty)
        return AlignmentResult(
            pairs=[(y, x) for x, y in mirrored.pairs],
            cost=mirrored.cost,
            n_aligned=mirrored.n_aligned,
        )
    sub = _substitution_costs(a, b).tolist() if n and m else [[] for _ in range(n)]
    dp = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = dp[i - 1][0] + gap_penalty
    for j in range(1, m + 1):
        dp[0][j] = dp[0][j - 1] + gap_penalty
    for i in range(1, n + 1):
        row = dp[i]
        above = dp[i - 1]
        costs = sub[i - 1]
        for j in range(1, m + 1):
            row[j] = min(
                above[j - 1] + costs[j - 1],
                above[j] + gap_penalty,
                row[j - 1] + gap_penalty,
            )

    pairs: list[tuple[int | None, int | None]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + sub[i - 1][j - 1]:
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
            continue
        if i > 0 and dp[i][j] == dp[i - 1][j] + gap_penalty:
            pairs.append((i - 1, None))
            i -= 1
            continue
        pairs.append((None, j - 1))
        j -= 1
    pairs.reverse()
    n_aligned = sum(1 for x, y in pairs if x is not None and y is not None)
    return AlignmentResult(pairs=pairs, cost=dp[n][m], n_aligned=n_aligned)


@dataclass
class DeviationReport:
    """Average per-note deviation over aligned (non-gap) pairs."""

    average_deviation: float
    per_note: list[tuple[float, float]]


def average_deviation(
    alignment: AlignmentResult, a: Melody, b: Melody
) -> DeviationReport:
    """Mean of (pitch-class deviation + duration deviation) over aligned pairs."""
    if alignment.n_aligned == 0:
        raise ValueError("average_deviation: no aligned note pairs")
    per_note = [
        note_deviation(a.notes[i], b.notes[j])
        for i, j in alignment.pairs
        if i is not None and j is not None
    ]
    total = sum(pc + dur for pc, dur in per_note)
    return DeviationReport(
        average_deviation=total / len(per_note), per_note=per_note
    )


def extract_melody_skyline(
    notes: Sequence[NoteEvent], cluster_window: float = SKYLINE_CLUSTER_WINDOW
) -> Melody:
    """Highest note per onset cluster, durations truncated at the next onset."""
    _require_notes(notes, "extract_melody_skyline")
    ordered = sorted(notes, key=lambda n: (n.onset, n.pitch))
    chosen: list[NoteEvent] = []
    cluster_start = None
    for note in ordered:
        if cluster_start is None or note.onset - cluster_start > cluster_window:
            chosen.append(note)
            cluster_start = note.onset
        elif note.pitch > chosen[-1].pitch:
            chosen[-1] = note
    melody_notes = []
    for k, note in enumerate(chosen):
        duration = note.duration
        if k + 1 < len(chosen):
            duration = min(duration, chosen[k + 1].onset - note.onset)
        melody_notes.append(MelodyNote(note.pitch, note.onset, duration))
    return Melody(melody_notes)


def contour(melody: Melody) -> list[tuple[float, int]]:
    """Ordered (onset, pitch) points of a melody, for line plotting."""
    if not melody.notes:
        raise ValueError("contour: empty melody")
    return [(n.onset, n.pitch) for n in melody.notes]


def contour_csv(melody: Melody) -> str:
    rows = [f"{onset:.6f},{pitch}" for onset, pitch in contour(melody)]
    return "onset_beats,pitch\n" + "\n".join(rows) + "\n"


def fit_beat_grid(
    onsets: Sequence[float],
    n_beats: float,
    span: tuple[float, float],
    subdivision: int = POLYPHONY_GRID_DIVISIONS,
) -> tuple[float, float]:
    """Fit a constant tempo to a window, returning (seconds_per_beat, offset).

    Starts from the proportional estimate span/n_beats, quantizes onsets to
    the nearest 1/subdivision beat under it, and refines by least squares.
    Falls back to the proportional estimate for degenerate inputs.
    """
    t0, t1 = span
    if t1 <= t0 or n_beats <= 0:
        raise ValueError(f"invalid window span {span} over {n_beats} beats")
    p0 = (t1 - t0) / n_beats
    ts = np.array(sorted(onsets), dtype=float)
    if ts.size < 2:
        return p0, t0
    qs = np.round((ts - t0) / p0 * subdivision) / subdivision
    var = ((qs - qs.mean()) ** 2).sum()
    if var == 0:
        return p0, t0
    slope = ((qs - qs.mean()) * (ts - ts.mean())).sum() / var
    if slope <= 0:
        return p0, t0
    offset = ts.mean() - slope * qs.mean()
    return float(slope), float(offset)


def melody_in_beats(
    notes: Sequence[NoteEvent],
    n_beats: float,
    span: tuple[float, float],
    cluster_window: float = SKYLINE_CLUSTER_WINDOW,
) -> Melody:
    """Skyline of a seconds-clock window, mapped onto a fitted beat grid."""
    _require_notes(notes, "melody_in_beats")
    spb, offset = fit_beat_grid([n.onset for n in notes], n_beats, span)
    sky = extract_melody_skyline(notes, cluster_window)
    return Melody(
        [
            MelodyNote(n.pitch, (n.onset - offset) / spb, n.duration / spb)
            for n in sky.notes
        ]
    )


@dataclass
class HarmonicRhythmSeries:
    """Chord labels over time and the count of chord changes per bar."""

    chords_per_bar: list[tuple[int, int]]
    labels: list[tuple[float, str]]

    def to_csv(self) -> str:
        rows = [f"{bar},{changes}" for bar, changes in self.chords_per_bar]
        return "bar,changes\n" + "\n".join(rows) + "\n"


def _beat_chroma(
    notes: Sequence[NoteEvent], n_beats: int, beat_length: float
) -> np.ndarray:
    """Duration-weighted pitch-class weights per beat, shape (n_beats, 12)."""
    chroma = np.zeros((n_beats, 12))
    for note in notes:
        for beat in range(n_beats):
            lo = beat * beat_length
            hi = lo + beat_length
            overlap = min(note.end, hi) - max(note.onset, lo)
            if overlap > 0:
                chroma[beat, note.pitch % 12] += overlap
    return chroma


def harmonic_rhythm(
    notes: Sequence[NoteEvent],
    beat_length: float = 1.0,
    beats_per_bar: int = 4,
    threshold: float = CHORD_MATCH_THRESHOLD,
) -> HarmonicRhythmSeries:
    """Per-bar chord-change counts from triad template matching.

    Each beat gets the best-matching major/minor triad by cosine similarity
    of its duration-weighted pitch-class vector ("N" when every match falls
    below the threshold).  A label switch must persist beyond a single beat
    to count as a chord change; one-beat excursions are absorbed.
    """
    _require_notes(notes, "harmonic_rhythm")
    t_end = max(n.end for n in notes)
    n_beats = max(1, math.ceil(t_end / beat_length - 1e-9))
    chroma = _beat_chroma(notes, n_beats, beat_length)
    templates = [
        (label, np.array([1.0 if pc in pcs else 0.0 for pc in range(12)]))
        for label, pcs in triad_templates()
    ]
    raw: list[str] = []
    for beat in range(n_beats):
        v = chroma[beat]
        norm = np.linalg.norm(v)
        if norm == 0:
            raw.append("N")
            continue
        best_label, best_sim = "N", threshold
        for label, tv in templates:
            sim = float(v @ tv) / (norm * np.linalg.norm(tv))
            if sim > best_sim:
                best_label, best_sim = label, sim
        raw.append(best_label)

    accepted = [raw[0]]
    for k in range(1, n_beats):
        if raw[k] != accepted[-1] and k + 1 < n_beats and raw[k + 1] == raw[k]:
            accepted.append(raw[k])
        else:
            accepted.append(accepted[-1])

    labels: list[tuple[float, str]] = [(0.0, accepted[0])]
    n_bars = math.ceil(n_beats / beats_per_bar)
    changes = [0] * n_bars
    for k in range(1, n_beats):
        if accepted[k] != accepted[k - 1]:
            labels.append((k * 1.0, accepted[k]))
            changes[k // beats_per_bar] += 1
    return HarmonicRhythmSeries(
        chords_per_bar=list(enumerate(changes)), labels=labels
    )
