"""HTTP API backing the matching workbench.

All bodies are JSON except /api/midi/{id}, which returns raw SMF bytes.
Every non-success response carries exactly one error object:
``{"error": {"code": ..., "message": ...}}`` with code one of not_found,
conflict, invalid, internal.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import analysis
from .corpus import (
    CorpusStore,
    DuplicatePairError,
    InvalidWindowError,
    NotFoundError,
    render_segment,
    scan_candidates,
)
from .midifile import NoteEvent


class PairRequest(BaseModel):
    original_id: str
    performance_id: str
    start_s: float
    end_s: float
    annotator: str = "anonymous"


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def _notes_json(notes: list[NoteEvent]) -> list[dict]:
    return [
        {
            "pitch": n.pitch,
            "onset_s": n.onset,
            "duration_s": n.duration,
            "velocity": n.velocity,
        }
        for n in notes
    ]


def create_app(store: CorpusStore) -> FastAPI:
    app = FastAPI(title="overpaint workbench API")
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(DuplicatePairError)
    async def _conflict(request: Request, exc: DuplicatePairError):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(InvalidWindowError)
    async def _invalid_window(request: Request, exc: InvalidWindowError):
        return _error(400, "invalid", str(exc))

    @app.exception_handler(ValueError)
    async def _invalid(request: Request, exc: ValueError):
        return _error(400, "invalid", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation(request: Request, exc: RequestValidationError):
        return _error(422, "invalid", str(exc.errors()))

    @app.exception_handler(StarletteHTTPException)
    async def _http(request: Request, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "invalid"
        return _error(exc.status_code, code, str(exc.detail))

    @app.exception_handler(Exception)
    async def _internal(request: Request, exc: Exception):
        return _error(500, "internal", str(exc))

    @app.get("/api/standards")
    def list_standards():
        return [
            {
                "id": std["id"],
                "title": std["title"],
                "segments": sum(
                    1 for s in store.segments.values() if s.leadsheet_id == std["id"]
                ),
            }
            for std in store.standards.values()
        ]

    @app.get("/api/standards/{standard_id}/segments")
    def list_segments(standard_id: str):
        if standard_id not in store.standards:
            raise NotFoundError(f"unknown standard {standard_id}")
        out = []
        for seg in store.segments.values():
            if seg.leadsheet_id != standard_id:
                continue
            rendered, duration = render_segment(seg)
            out.append(
                {
                    "id": seg.id,
                    "start_bar": seg.start_bar,
                    "n_beats": seg.n_beats,
                    "duration_s": duration,
                    "notes": _notes_json(rendered),
                }
            )
        return out

    @app.get("/api/performances")
    def list_performances():
        out = []
        for perf in store.performances.values():
            seq = store.performance_sequence(perf.id)
            out.append(
                {
                    "id": perf.id,
                    "title": perf.title,
                    "standard_title": perf.standard_title,
                    "performer": perf.performer,
                    "duration_s": seq.end_time,
                    "n_notes": len(seq.notes),
                }
            )
        return out

    @app.get("/api/performances/{performance_id}/notes")
    def performance_notes(
        performance_id: str,
        start_s: float | None = Query(default=None),
        end_s: float | None = Query(default=None),
    ):
        if (
            start_s is not None
            and end_s is not None
            and end_s <= start_s
        ):
            raise InvalidWindowError(f"window end {end_s} <= start {start_s}")
        notes = store.performance_notes(performance_id, start_s, end_s)
        return {
            "performance_id": performance_id,
            "start_s": start_s or 0.0,
            "end_s": end_s,
            "notes": _notes_json(notes),
        }

    def _run_scan(segment_id: str, performance_id: str, top_k: int, invariant: bool):
        seg = store.segment(segment_id)
        seq = store.performance_sequence(performance_id)
        found = scan_candidates(
            seg, seq.notes, seq.end_time, top_k=top_k,
            transposition_invariant=invariant,
        )
        return [
            {
                "start_s": c.start_s,
                "end_s": c.end_s,
                "value": c.score.value,
                "melodic": c.score.melodic,
                "harmonic": c.score.harmonic,
            }
            for c in found
        ]

    @app.get("/api/segments/{segment_id}/candidates")
    def candidates(
        segment_id: str,
        performance_id: str,
        top_k: int = Query(default=20, gt=0),
        transposition_invariant: bool = False,
        mode: str = Query(default="sync", pattern="^(sync|async)$"),
    ):
        store.segment(segment_id)
        store.performance(performance_id)
        if mode == "sync":
            return _run_scan(segment_id, performance_id, top_k, transposition_invariant)

        job_id = uuid.uuid4().hex
        with jobs_lock:
            jobs[job_id] = {"status": "running", "result": None, "error": None}

        def work():
            try:
                result = _run_scan(
                    segment_id, performance_id, top_k, transposition_invariant
                )
                with jobs_lock:
                    jobs[job_id].update(status="done", result=result)
            except Exception as exc:  # surfaced through job polling
                with jobs_lock:
                    jobs[job_id].update(status="error", error=str(exc))

        threading.Thread(target=work, daemon=True).start()
        return {"job_id": job_id, "status": "running"}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        with jobs_lock:
            job = jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"unknown job {job_id}")
            return {"job_id": job_id, **job}

    @app.get("/api/pairs")
    def list_pairs():
        return [vars(p).copy() for p in store.pairs.values()]

    @app.post("/api/pairs", status_code=201)
    def save_pair(body: PairRequest):
        record = store.save_pair(
            original_id=body.original_id,
            performance_id=body.performance_id,
            start_s=body.start_s,
            end_s=body.end_s,
            annotator=body.annotator,
        )
        variation = store.variation(record.variation_id)
        return {
            "pair": vars(record).copy(),
            "variation": {
                "id": variation.id,
                "start_s": variation.start_s,
                "end_s": variation.end_s,
                "n_notes": len(variation.notes),
            },
        }

    @app.delete("/api/pairs/{pair_id}")
    def delete_pair(pair_id: str):
        store.delete_pair(pair_id)
        return {"deleted": pair_id}

    @app.get("/api/pairs/{pair_id}/review")
    def review_pair(pair_id: str):
        record = store.pair(pair_id)
        seg = store.segment(record.original_id)
        variation = store.variation(record.variation_id)
        rendered, _ = render_segment(seg)
        spb = 0.5
        ref = analysis.Melody(
            [
                analysis.MelodyNote(n.pitch, n.onset / spb, n.duration / spb)
                for n in analysis.extract_melody_skyline(rendered).notes
            ]
        )
        win = analysis.melody_in_beats(
            variation.notes, seg.n_beats, (0.0, variation.duration)
        )
        alignment = analysis.align_melodies(ref, win)
        try:
            deviation = analysis.average_deviation(alignment, ref, win).average_deviation
        except ValueError:
            deviation = None
        grid = spb / analysis.POLYPHONY_GRID_DIVISIONS
        return {
            "pair": vars(record).copy(),
            "alignment": {
                "cost": alignment.cost,
                "n_aligned": alignment.n_aligned,
                "pairs": [[a, b] for a, b in alignment.pairs],
            },
            "average_deviation": deviation,
            "features": {
                "original": analysis.segment_features(rendered, grid),
                "variation": analysis.segment_features(variation.notes, grid),
            },
            "melodies": {
                "original": [
                    {"pitch": n.pitch, "onset_beats": n.onset, "duration_beats": n.duration}
                    for n in ref.notes
                ],
                "variation": [
                    {"pitch": n.pitch, "onset_beats": n.onset, "duration_beats": n.duration}
                    for n in win.notes
                ],
            },
        }

    @app.get("/api/midi/{item_id}")
    def midi_payload(item_id: str):
        data = store.midi_bytes(item_id)
        return Response(content=data, media_type="audio/midi")

    return app
