"""Deterministic synthetic corpus: lead sheets, performances, saved pairs.

Every generated performance opens with an exact rendered copy of its
standard's first theme segment (1 s in, on the 0.5 s scan grid) so that
self-similarity checks have a planted ground-truth window; later passages
are ornamented renders that stand in for performed variations.

Run ``python -m overpaint.synthdata OUTDIR`` to materialize a demo corpus.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from .corpus import (
    BEATS_PER_BAR,
    CorpusStore,
    LeadSheet,
    OriginalSegment,
    render_segment,
    segment_leadsheet,
    trim_to_refrain,
)
from .harmony import ChordSymbol, voice_triad
from .midifile import (
    DEFAULT_PPQ,
    NoteEvent,
    NoteSequence,
    TimingMap,
    write_midi,
)

RENDER_BPM = 120.0
PLANT_OFFSET_S = 1.0
GAP_S = 2.0

_TITLES = (
    "Autumn Sketch", "Blue Meridian", "Cobalt Avenue", "Driftwood Waltz",
    "Evening Arc", "First Light Rag",
)
_PERFORMERS = (
    "Ada Quill", "Bram Holt", "Cleo Marsh", "Dex Arlen", "Etta Vale",
    "Flor Ives",
)
_PROGRESSION = ("C", "Am", "F", "G")
_RHYTHMS = (
    (1.0, 1.0, 1.0, 1.0),
    (2.0, 1.0, 1.0),
    (1.0, 0.5, 0.5, 1.0, 1.0),
    (2.0, 2.0),
    (0.5, 0.5, 1.0, 1.0, 1.0),
)


def make_leadsheet(
    sheet_id: str,
    title: str,
    seed: int,
    refrain_bars: int = 32,
    intro_bars: int = 4,
) -> tuple[LeadSheet, list[tuple[str, int, int]]]:
    """A full lead sheet (intro + refrain) and its section annotations."""
    rng = random.Random(seed)
    root = (5 * seed) % 12
    scale = [(root + s) % 12 for s in (0, 2, 4, 5, 7, 9, 11)]
    total_bars = intro_bars + refrain_bars
    melody = []
    degree = rng.randrange(len(scale))
    for bar in range(total_bars):
        beat = bar * BEATS_PER_BAR
        for dur in rng.choice(_RHYTHMS):
            degree = max(0, min(len(scale) - 1, degree + rng.choice((-2, -1, 1, 2))))
            octave = 72 if degree < 5 else 60
            pitch = octave + scale[degree]
            melody.append(
                NoteEvent(
                    onset=float(beat),
                    duration=dur,
                    pitch=pitch,
                    velocity=4 * rng.randrange(12, 26),
                )
            )
            beat += dur
    chords = []
    for k in range(0, total_bars, 2):
        symbol = ChordSymbol.parse(_PROGRESSION[(k // 2) % len(_PROGRESSION)])
        chords.append((float(k * BEATS_PER_BAR), symbol.transposed(root)))
    sheet = LeadSheet(
        id=sheet_id, title=title, melody=melody, chords=chords, n_bars=total_bars
    )
    sections = [
        ("intro", 0, intro_bars),
        ("refrain", intro_bars, intro_bars + refrain_bars),
    ]
    return sheet, sections


def leadsheet_midi_bytes(sheet: LeadSheet, bpm: float = RENDER_BPM) -> bytes:
    """Format-1 SMF: melody on track 0, chord voicings on track 1."""
    spb = 60.0 / bpm
    timing = TimingMap(ppq=DEFAULT_PPQ, tempo_changes=[(0, round(60e6 / bpm))])
    melody = [
        NoteEvent(n.onset * spb, n.duration * spb, n.pitch, n.velocity)
        for n in sheet.melody
    ]
    chords = []
    for k, (start, symbol) in enumerate(sheet.chords):
        end = (
            sheet.chords[k + 1][0]
            if k + 1 < len(sheet.chords)
            else float(sheet.n_bars * BEATS_PER_BAR)
        )
        if end <= start:
            continue
        for pitch in voice_triad(symbol, below_pitch=60):
            chords.append(
                NoteEvent((start * spb), (end - start) * spb, pitch, 64)
            )
    # Reuse the format-0 writer per track, then stitch a format-1 container.
    track_bodies = []
    for notes in (melody, chords):
        raw = write_midi(NoteSequence(notes=notes, timing=timing))
        track_bodies.append(raw[14 + 8 :])  # strip header + MTrk chunk header
    header = (
        b"MThd" + (6).to_bytes(4, "big") + (1).to_bytes(2, "big")
        + len(track_bodies).to_bytes(2, "big") + DEFAULT_PPQ.to_bytes(2, "big")
    )
    out = bytearray(header)
    for body in track_bodies:
        out += b"MTrk" + len(body).to_bytes(4, "big") + body
    return bytes(out)


def ornamented_render(
    seg: OriginalSegment, seed: int, transpose: int = 0
) -> list[NoteEvent]:
    """A render with passing tones, bass doublings, and 10 ms-grid jitter."""
    rng = random.Random(seed)
    base, _ = render_segment(seg, bpm=RENDER_BPM)
    out = []
    for n in base:
        jitter = rng.choice((-2, -1, 0, 0, 1, 2)) / 100.0
        onset = max(0.0, n.onset + jitter)
        pitch = min(127, max(0, n.pitch + transpose))
        out.append(NoteEvent(onset, n.duration, pitch, n.velocity))
        if n.pitch >= 60 and rng.random() < 0.3:
            passing = min(127, pitch + rng.choice((1, 2)))
            out.append(
                NoteEvent(onset + n.duration / 2, max(0.05, n.duration / 4), passing, max(1, n.velocity - 8))
            )
        if n.pitch < 60 and rng.random() < 0.4:
            out.append(NoteEvent(onset, n.duration, max(0, pitch - 12), n.velocity))
    out.sort(key=lambda n: (n.onset, n.pitch))
    return out


def performance_notes_for(
    segments: list[OriginalSegment], seed: int
) -> tuple[list[NoteEvent], list[tuple[str, float, float]]]:
    """Planted exact copy of segment 0, then ornamented takes of the rest.

    Returns (notes, [(segment_id, window_start, window_end), ...]).
    """
    notes: list[NoteEvent] = []
    windows: list[tuple[str, float, float]] = []
    cursor = PLANT_OFFSET_S
    planted, duration = render_segment(segments[0], bpm=RENDER_BPM)
    notes.extend(
        NoteEvent(n.onset + cursor, n.duration, n.pitch, n.velocity) for n in planted
    )
    windows.append((segments[0].id, cursor, cursor + duration))
    cursor += duration + GAP_S
    for k, seg in enumerate(segments[1:4], start=1):
        take = ornamented_render(seg, seed=seed * 31 + k)
        _, duration = render_segment(seg, bpm=RENDER_BPM)
        notes.extend(
            NoteEvent(n.onset + cursor, n.duration, n.pitch, n.velocity) for n in take
        )
        windows.append((seg.id, cursor, cursor + duration))
        cursor += duration + GAP_S
    return notes, windows


def build_demo_corpus(
    root: str | Path,
    seed: int = 0,
    n_standards: int = 3,
    n_performances: int = 4,
    save_pairs: bool = True,
    write_leadsheet_files: bool = True,
) -> CorpusStore:
    """Create a complete synthetic corpus rooted at ``root``."""
    root = Path(root)
    store = CorpusStore.create(root)
    sheets: list[LeadSheet] = []
    refrains: list[LeadSheet] = []
    all_segments: dict[str, list[OriginalSegment]] = {}
    for i in range(n_standards):
        sheet_id = f"std-{i:02d}"
        title = _TITLES[i % len(_TITLES)]
        sheet, sections = make_leadsheet(sheet_id, title, seed=seed * 17 + i)
        sheets.append(sheet)
        refrain = trim_to_refrain(sheet, sections)
        refrains.append(refrain)
        segments = segment_leadsheet(refrain)
        all_segments[sheet_id] = segments
        store.add_standard(sheet_id, title)
        store.add_segments(segments)
        if write_leadsheet_files:
            sheet_dir = root / "leadsheets"
            sheet_dir.mkdir(exist_ok=True)
            (sheet_dir / f"{sheet_id}.mid").write_bytes(leadsheet_midi_bytes(sheet))
            (sheet_dir / f"{sheet_id}.sections.json").write_text(
                json.dumps(
                    {
                        "id": sheet_id,
                        "title": title,
                        "sections": [list(s) for s in sections],
                        "chords": [
                            {"start_beat": start, "symbol": str(sym)}
                            for start, sym in sheet.chords
                        ],
                    },
                    indent=2,
                )
            )

    pair_windows: list[tuple[str, str, float, float]] = []
    for j in range(n_performances):
        std = sheets[j % n_standards]
        segments = all_segments[std.id]
        perf_id = f"perf-{j:02d}"
        notes, windows = performance_notes_for(segments, seed=seed * 101 + j)
        timing = TimingMap(ppq=DEFAULT_PPQ, tempo_changes=[(0, 500_000)])
        store.add_performance(
            perf_id,
            title=f"{std.title} (live take {j})",
            standard_title=std.title,
            performer=_PERFORMERS[j % len(_PERFORMERS)],
            midi_bytes=write_midi(NoteSequence(notes=notes, timing=timing)),
        )
        pair_windows.extend(
            (seg_id, perf_id, start, end) for seg_id, start, end in windows
        )

    if save_pairs:
        for seg_id, perf_id, start, end in pair_windows:
            store.save_pair(
                original_id=seg_id,
                performance_id=perf_id,
                start_s=start,
                end_s=end,
                annotator="synthdata",
                created_at="1970-01-01T00:00:00+00:00",
            )
    return store


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="Write a synthetic demo corpus for the pipeline."
    )
    parser.add_argument("out", help="output corpus directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--standards", type=int, default=3)
    parser.add_argument("--performances", type=int, default=4)
    parser.add_argument(
        "--no-pairs", action="store_true", help="register corpus without saving pairs"
    )
    args = parser.parse_args(argv)
    store = build_demo_corpus(
        args.out,
        seed=args.seed,
        n_standards=args.standards,
        n_performances=args.performances,
        save_pairs=not args.no_pairs,
    )
    print(json.dumps(store.summary()))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
