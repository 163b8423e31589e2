"""Command-line entry points for every pipeline stage.

Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors.  The
default manifest directory can be set via the OVERPAINT_MANIFEST
environment variable.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analysis, tokenizer
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import (
    VariationSegment,
    leadsheet_from_midi,
    load_manifest,
    render_segment,
    scan_candidates,
    score_candidate,
    segment_leadsheet,
    trim_to_refrain,
)
from .generate import SamplingConfig, evaluate_generation, generate
from .harmony import ChordSymbol
from .midifile import NoteSequence, TimingMap, parse_midi, write_midi
from .model import ModelConfig
from .training import examples_from_store, split_examples, train

MANIFEST_ENVVAR = "OVERPAINT_MANIFEST"

manifest_option = click.option(
    "--manifest",
    "manifest_path",
    envvar=MANIFEST_ENVVAR,
    required=True,
    type=click.Path(exists=True, file_okay=True, dir_okay=True, path_type=Path),
    help="Corpus directory (or its manifest.json).",
)


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


@click.group()
def cli():
    """Theme/variation corpus, analysis, and generation toolkit."""


@cli.command()
@click.option("--leadsheet", "leadsheet_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--sections", "sections_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--manifest", "manifest_path", envvar=MANIFEST_ENVVAR, type=click.Path(path_type=Path), default=None, help="Corpus directory to register segments in.")
@click.option("--bars", default=4, show_default=True, help="Bars per segment window.")
@click.option("--keep-partial", is_flag=True, help="Keep a trailing partial window, padded to full length.")
def segment(leadsheet_path, sections_path, out_dir, manifest_path, bars, keep_partial):
    """Trim a lead sheet to its final refrain and cut fixed-length windows."""
    try:
        meta = json.loads(Path(sections_path).read_text())
        chords = [
            (row["start_beat"], ChordSymbol.parse(row["symbol"]))
            for row in meta.get("chords", [])
        ] or None
        sheet = leadsheet_from_midi(
            Path(leadsheet_path).read_bytes(),
            sheet_id=meta.get("id", Path(leadsheet_path).stem),
            title=meta.get("title", Path(leadsheet_path).stem),
            chords=chords,
        )
        sections = [tuple(s) for s in meta["sections"]]
        refrain = trim_to_refrain(sheet, sections)
        segments = segment_leadsheet(
            refrain, bars_per_segment=bars, keep_partial=keep_partial
        )
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        from .corpus import segment_to_midi

        for seg in segments:
            safe = seg.id.replace(":", "_")
            (out_dir / f"{safe}.mid").write_bytes(segment_to_midi(seg))
        if manifest_path is not None:
            store = load_manifest(manifest_path)
            if sheet.id not in store.standards:
                store.add_standard(sheet.id, sheet.title)
            store.add_segments(segments)
        click.echo(f"wrote {len(segments)} segments to {out_dir}")
    except (ValueError, OSError, KeyError) as exc:
        raise _fail(str(exc)) from exc


@cli.command()
@manifest_option
@click.option("--segment", "segment_id", required=True)
@click.option("--performance", "performance_id", required=True)
@click.option("--start", type=float, default=None, help="Window start (seconds); omit to scan.")
@click.option("--end", type=float, default=None, help="Window end (seconds).")
@click.option("--transposition-invariant", is_flag=True)
@click.option("--top-k", default=20, show_default=True)
def score(manifest_path, segment_id, performance_id, start, end, transposition_invariant, top_k):
    """Score one window, or scan a performance for candidate windows."""
    try:
        store = load_manifest(manifest_path)
        seg = store.segment(segment_id)
        seq = store.performance_sequence(performance_id)
        if start is not None and end is not None:
            notes = store.performance_notes(performance_id, start, end)
            if not notes:
                raise _fail("window contains no notes")
            window = VariationSegment(
                id="cli", performance_id=performance_id, start_s=start, end_s=end,
                notes=notes,
            )
            result = score_candidate(
                seg, window, transposition_invariant=transposition_invariant
            )
            click.echo(json.dumps(vars(result)))
        else:
            found = scan_candidates(
                seg, seq.notes, seq.end_time, top_k=top_k,
                transposition_invariant=transposition_invariant,
            )
            click.echo(
                json.dumps(
                    [
                        {"start_s": c.start_s, "end_s": c.end_s, **vars(c.score)}
                        for c in found
                    ]
                )
            )
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


@cli.command()
@manifest_option
@click.option("--group", type=click.Choice(["originals", "variations"]), required=True)
@click.option("--csv", "csv_path", required=True, type=click.Path(path_type=Path))
def stats(manifest_path, group, csv_path, ):
    """Per-segment metrics plus mean/sd rows, as CSV."""
    try:
        store = load_manifest(manifest_path)
        if group == "originals":
            segments = {
                seg_id: render_segment(seg)[0]
                for seg_id, seg in sorted(store.segments.items())
            }
        else:
            segments = {
                var_id: var.notes
                for var_id, var in sorted(store.variations.items())
            }
        grid_step = 0.5 / analysis.POLYPHONY_GRID_DIVISIONS
        report = analysis.corpus_stats(segments, grid_step=grid_step)
        Path(csv_path).write_text(report.to_csv())
        click.echo(f"wrote {len(report.per_segment)} rows to {csv_path}")
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


@cli.command()
@manifest_option
@click.option("--pair", "pair_id", required=True)
@click.option("--json", "json_path", type=click.Path(path_type=Path), default=None)
def align(manifest_path, pair_id, json_path):
    """Align a pair's melodies and report the average deviation."""
    try:
        store = load_manifest(manifest_path)
        record = store.pair(pair_id)
        seg = store.segment(record.original_id)
        variation = store.variation(record.variation_id)
        rendered, _ = render_segment(seg)
        ref = analysis.extract_melody_skyline(rendered)
        ref_beats = analysis.Melody(
            [
                analysis.MelodyNote(n.pitch, n.onset / 0.5, n.duration / 0.5)
                for n in ref.notes
            ]
        )
        win = analysis.melody_in_beats(
            variation.notes, seg.n_beats, (0.0, variation.duration)
        )
        alignment = analysis.align_melodies(ref_beats, win)
        deviation = analysis.average_deviation(alignment, ref_beats, win)
        doc = {
            "pair": pair_id,
            "cost": alignment.cost,
            "n_aligned": alignment.n_aligned,
            "average_deviation": deviation.average_deviation,
            "pairs": [[a, b] for a, b in alignment.pairs],
        }
        text = json.dumps(doc, indent=2)
        if json_path is not None:
            Path(json_path).write_text(text)
        click.echo(text)
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


def _load_melody(midi_path: Path, seconds_per_beat: float) -> analysis.Melody:
    seq = parse_midi(Path(midi_path).read_bytes())
    if not seq.notes:
        raise _fail(f"{midi_path}: no notes")
    sky = analysis.extract_melody_skyline(seq.notes)
    return analysis.Melody(
        [
            analysis.MelodyNote(
                n.pitch, n.onset / seconds_per_beat, n.duration / seconds_per_beat
            )
            for n in sky.notes
        ]
    )


@cli.command()
@click.option("--midi", "midi_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--csv", "csv_path", required=True, type=click.Path(path_type=Path))
@click.option("--svg", "svg_path", type=click.Path(path_type=Path), default=None)
@click.option("--seconds-per-beat", default=0.5, show_default=True)
def contour(midi_path, csv_path, svg_path, seconds_per_beat):
    """Export a melody contour (onset_beats, pitch) as CSV and optional SVG."""
    try:
        melody = _load_melody(midi_path, seconds_per_beat)
        Path(csv_path).write_text(analysis.contour_csv(melody))
        if svg_path is not None:
            _plot_contour(melody, svg_path)
        click.echo(f"wrote contour of {len(melody)} notes to {csv_path}")
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


def _plot_contour(melody: analysis.Melody, svg_path: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    points = analysis.contour(melody)
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.step([p[0] for p in points], [p[1] for p in points], where="post")
    ax.set_xlabel("beats")
    ax.set_ylabel("pitch")
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)


@cli.command()
@click.option("--midi", "midi_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--csv", "csv_path", required=True, type=click.Path(path_type=Path))
@click.option("--svg", "svg_path", type=click.Path(path_type=Path), default=None)
@click.option("--seconds-per-beat", default=0.5, show_default=True)
def rhythm(midi_path, csv_path, svg_path, seconds_per_beat):
    """Export per-bar chord-change counts as CSV and optional SVG."""
    try:
        seq = parse_midi(Path(midi_path).read_bytes())
        if not seq.notes:
            raise _fail(f"{midi_path}: no notes")
        series = analysis.harmonic_rhythm(seq.notes, beat_length=seconds_per_beat)
        Path(csv_path).write_text(series.to_csv())
        if svg_path is not None:
            _plot_rhythm(series, svg_path)
        click.echo(f"wrote {len(series.chords_per_bar)} bars to {csv_path}")
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


def _plot_rhythm(series: analysis.HarmonicRhythmSeries, svg_path: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    bars = [b for b, _ in series.chords_per_bar]
    changes = [c for _, c in series.chords_per_bar]
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(bars, changes, marker="o")
    ax.set_xlabel("bar")
    ax.set_ylabel("chord changes")
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)


@cli.command()
@click.option("--midi", "midi_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def tokenize(midi_path, out_path):
    """Encode a MIDI file as an event-token JSON list."""
    try:
        seq = parse_midi(Path(midi_path).read_bytes())
        tokens = tokenizer.encode(seq.notes)
        Path(out_path).write_text(json.dumps(tokens))
        click.echo(f"wrote {len(tokens)} tokens to {out_path}")
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


@cli.command(name="train")
@manifest_option
@click.option("--out", "ckpt_path", required=True, type=click.Path(path_type=Path))
@click.option("--steps", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--layers", default=2, show_default=True)
@click.option("--heads", default=2, show_default=True)
@click.option("--d-model", default=64, show_default=True)
@click.option("--d-ff", default=128, show_default=True)
@click.option("--max-len", default=1024, show_default=True)
@click.option("--dropout", default=0.0, show_default=True)
@click.option("--batch-size", default=8, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--warmup", default=50, show_default=True)
@click.option("--log", "log_path", type=click.Path(path_type=Path), default=None, help="Line-delimited JSON training records.")
def train_cmd(manifest_path, ckpt_path, steps, seed, layers, heads, d_model, d_ff, max_len, dropout, batch_size, lr, warmup, log_path):
    """Train the variation model on the corpus pairs (90/10 seeded split)."""
    try:
        store = load_manifest(manifest_path)
        examples = examples_from_store(store, max_len=max_len)
        if not examples:
            raise _fail("manifest has no pairs to train on")
        train_set, val_set = split_examples(examples, seed=seed)
        if not train_set:
            train_set, val_set = list(examples), []
        config = ModelConfig(
            layers=layers, heads=heads, d_model=d_model, d_ff=d_ff,
            max_len=max_len, rel_window=max_len, dropout=dropout, seed=seed,
        )
        log_fh = open(log_path, "w") if log_path is not None else None
        try:
            def emit(record: dict):
                if log_fh is not None:
                    log_fh.write(json.dumps(record) + "\n")

            ckpt = train(
                train_set, config, steps=steps, batch_size=batch_size, lr=lr,
                warmup_steps=warmup, val_examples=val_set, log=emit,
            )
        finally:
            if log_fh is not None:
                log_fh.close()
        save_checkpoint(ckpt_path, ckpt)
        click.echo(
            f"trained {steps} steps on {len(train_set)} examples "
            f"(val {len(val_set)}); final loss {ckpt.train_history[-1]:.4f}"
        )
    except (ValueError, OSError, RuntimeError) as exc:
        raise _fail(str(exc)) from exc


@cli.command(name="generate")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--primer", "primer_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
@click.option("--greedy/--sample", default=True, show_default=True)
@click.option("--temperature", default=1.0, show_default=True)
@click.option("--top-k", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-new", default=512, show_default=True)
def generate_cmd(ckpt_path, primer_path, out_path, greedy, temperature, top_k, seed, max_new):
    """Generate a variation from a primer MIDI file."""
    try:
        ckpt = load_checkpoint(ckpt_path)
        primer = parse_midi(Path(primer_path).read_bytes())
        result = generate(
            ckpt,
            primer.notes,
            max_new=max_new,
            sampling=SamplingConfig(
                greedy=greedy, temperature=temperature, top_k=top_k, seed=seed
            ),
        )
        timing = TimingMap()
        Path(out_path).write_bytes(
            write_midi(NoteSequence(notes=result.notes, timing=timing))
        )
        if result.empty:
            click.echo("warning: generation decoded to zero notes", err=True)
        click.echo(
            f"generated {len(result.notes)} notes ({len(result.tokens)} tokens, "
            f"{result.warnings} repairs) to {out_path}"
        )
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


@cli.command()
@click.option("--original", "original_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--generated", "generated_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--csv", "csv_path", required=True, type=click.Path(path_type=Path))
def evaluate(original_path, generated_path, csv_path):
    """Side-by-side feature table for a theme and a generated variation."""
    try:
        original = parse_midi(Path(original_path).read_bytes())
        generated = parse_midi(Path(generated_path).read_bytes())
        comparison = evaluate_generation(
            original.notes, generated.notes,
            grid_step=0.5 / analysis.POLYPHONY_GRID_DIVISIONS,
        )
        Path(csv_path).write_text(comparison.to_csv())
        click.echo(f"wrote comparison to {csv_path}")
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


@cli.command()
@manifest_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
def serve(manifest_path, host, port):
    """Serve the matching-workbench HTTP API."""
    try:
        import uvicorn

        from .server import create_app

        store = load_manifest(manifest_path)
        uvicorn.run(create_app(store), host=host, port=port, log_level="warning")
    except (ValueError, OSError) as exc:
        raise _fail(str(exc)) from exc


def main() -> int:
    return cli(standalone_mode=True)


if __name__ == "__main__":
    sys.exit(main())
