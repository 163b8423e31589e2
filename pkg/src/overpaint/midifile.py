"""Standard MIDI File (format 0/1) reading and writing, plus clock conversion.

The parser handles running status, note-on-with-velocity-0 as note-off, and
tempo/time-signature meta events.  All note times are resolved to seconds
through the file's tempo map.  The writer emits format-0 files; tempo and
time-signature events that equal the MIDI defaults (120 BPM, 4/4 at tick 0)
are omitted, so an all-default sequence serializes to header + end-of-track
only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_PPQ = 480
DEFAULT_TEMPO = 500_000  # microseconds per quarter note = 120 BPM
DEFAULT_TIME_SIGNATURE = (4, 4)

_MAX_VLQ = 0x0FFFFFFF

_HEADER_MAGIC = b"MThd"
_TRACK_MAGIC = b"MTrk"


class MidiParseError(ValueError):
    """Malformed SMF input; ``offset`` is the byte position of the fault."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


class MidiWriteError(ValueError):
    """A NoteSequence cannot be represented as an SMF byte stream."""


@dataclass(frozen=True)
class NoteEvent:
    """One sounded note. Times are in the owning container's clock."""

    onset: float
    duration: float
    pitch: int
    velocity: int
    track: int = 0

    def __post_init__(self):
        if self.onset < 0:
            raise ValueError(f"negative onset {self.onset}")
        if self.duration <= 0:
            raise ValueError(f"non-positive duration {self.duration}")
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch {self.pitch} outside 0..127")
        if not 1 <= self.velocity <= 127:
            raise ValueError(f"velocity {self.velocity} outside 1..127")

    @property
    def end(self) -> float:
        return self.onset + self.duration

    @property
    def pitch_class(self) -> int:
        return self.pitch % 12


@dataclass
class TimingMap:
    """PPQ resolution plus tempo and time-signature change lists.

    Change lists are sorted by tick and always carry an entry at tick 0.
    """

    ppq: int = DEFAULT_PPQ
    tempo_changes: list[tuple[int, int]] = field(
        default_factory=lambda: [(0, DEFAULT_TEMPO)]
    )
    time_signatures: list[tuple[int, int, int]] = field(
        default_factory=lambda: [(0, *DEFAULT_TIME_SIGNATURE)]
    )

    def __post_init__(self):
        if self.ppq <= 0:
            raise ValueError(f"ppq must be positive, got {self.ppq}")
        if not self.tempo_changes:
            raise ValueError("at least one tempo change required")
        if not self.time_signatures:
            raise ValueError("at least one time signature required")
        for name, changes in (
            ("tempo_changes", self.tempo_changes),
            ("time_signatures", self.time_signatures),
        ):
            ticks = [c[0] for c in changes]
            if ticks != sorted(ticks):
                raise ValueError(f"{name} not sorted by tick")
            if ticks[0] != 0:
                raise ValueError(f"first {name} entry must be at tick 0")
        for _, us in self.tempo_changes:
            if us <= 0:
                raise ValueError(f"non-positive tempo {us}")

    def _anchors(self) -> list[tuple[float, float, int]]:
        """(tick, seconds, us_per_quarter) at each tempo-change point."""
        anchors = []
        seconds = 0.0
        prev_tick, prev_us = self.tempo_changes[0]
        anchors.append((float(prev_tick), 0.0, prev_us))
        for tick, us in self.tempo_changes[1:]:
            seconds += (tick - prev_tick) * prev_us / (self.ppq * 1e6)
            anchors.append((float(tick), seconds, us))
            prev_tick, prev_us = tick, us
        return anchors

    def seconds_at_tick(self, tick: float) -> float:
        anchors = self._anchors()
        a_tick, a_sec, a_us = anchors[0]
        for t, s, us in anchors[1:]:
            if t > tick:
                break
            a_tick, a_sec, a_us = t, s, us
        return a_sec + (tick - a_tick) * a_us / (self.ppq * 1e6)

    def tick_at_seconds(self, seconds: float) -> float:
        anchors = self._anchors()
        a_tick, a_sec, a_us = anchors[0]
        for t, s, us in anchors[1:]:
            if s > seconds:
                break
            a_tick, a_sec, a_us = t, s, us
        return a_tick + (seconds - a_sec) * self.ppq * 1e6 / a_us


def beats_of(t: float, timing: TimingMap) -> float:
    """Convert a non-negative time in seconds to beats (quarter notes)."""
    if t < 0:
        raise ValueError(f"negative time {t}")
    return timing.tick_at_seconds(t) / timing.ppq


def seconds_of(b: float, timing: TimingMap) -> float:
    """Convert a non-negative time in beats (quarter notes) to seconds."""
    if b < 0:
        raise ValueError(f"negative beat {b}")
    return timing.seconds_at_tick(b * timing.ppq)


def _note_sort_key(n: NoteEvent):
    return (n.onset, n.pitch, n.track, n.duration)


@dataclass
class NoteSequence:
    """Notes plus timing; the common currency of the toolkit.

    ``controls`` holds raw non-note channel messages as (tick, bytes) so a
    parse/write cycle preserves them; they are excluded from equality.
    """

    notes: list[NoteEvent] = field(default_factory=list)
    timing: TimingMap = field(default_factory=TimingMap)
    end_time: float | None = None
    controls: list[tuple[int, bytes]] = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.notes = sorted(self.notes, key=_note_sort_key)
        if self.end_time is None:
            self.end_time = max((n.end for n in self.notes), default=0.0)
        else:
            max_end = max((n.end for n in self.notes), default=0.0)
            if self.end_time < max_end - 1e-9:
                raise ValueError(
                    f"end_time {self.end_time} before last note end {max_end}"
                )


class _Reader:
    """Bounds-checked byte cursor; every overrun is a MidiParseError."""

    def __init__(self, data: bytes, pos: int = 0, limit: int | None = None):
        self.data = data
        self.pos = pos
        self.limit = len(data) if limit is None else limit

    def remaining(self) -> int:
        return self.limit - self.pos

    def _need(self, n: int, what: str):
        if self.pos + n > self.limit:
            raise MidiParseError(self.pos, f"truncated {what}")

    def u8(self, what: str = "byte") -> int:
        self._need(1, what)
        b = self.data[self.pos]
        self.pos += 1
        return b

    def peek(self) -> int:
        self._need(1, "byte")
        return self.data[self.pos]

    def take(self, n: int, what: str) -> bytes:
        self._need(n, what)
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self, what: str) -> int:
        return int.from_bytes(self.take(2, what), "big")

    def u32(self, what: str) -> int:
        return int.from_bytes(self.take(4, what), "big")

    def vlq(self) -> int:
        # SMF variable-length quantity: at most 4 bytes, 7 payload bits each.
        start = self.pos
        value = 0
        for _ in range(4):
            b = self.u8("variable-length quantity")
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise MidiParseError(start, "variable-length quantity exceeds 4 bytes")


def _encode_vlq(value: int) -> bytes:
    if not 0 <= value <= _MAX_VLQ:
        raise MidiWriteError(f"value {value} outside variable-length range")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def _parse_track(
    reader: _Reader,
) -> tuple[list[tuple[int, int, int, int]], list[tuple[int, int]], list[tuple[int, int, int]], list[tuple[int, bytes]]]:
    """Parse one MTrk body; returns (raw notes, tempos, time sigs, controls).

    Raw notes are (start_tick, end_tick, pitch, velocity).
    """
    notes: list[tuple[int, int, int, int]] = []
    tempos: list[tuple[int, int]] = []
    timesigs: list[tuple[int, int, int]] = []
    controls: list[tuple[int, bytes]] = []
    active: dict[tuple[int, int], tuple[int, int]] = {}  # (channel, pitch) -> (tick, vel)
    tick = 0
    running_status: int | None = None

    def close(channel: int, pitch: int, end_tick: int):
        key = (channel, pitch)
        started = active.pop(key, None)
        if started is None:
            return  # stray note-off
        start_tick, velocity = started
        if end_tick > start_tick:  # zero-length notes are dropped
            notes.append((start_tick, end_tick, pitch, velocity))

    while reader.remaining() > 0:
        tick += reader.vlq()
        status_pos = reader.pos
        first = reader.peek()
        if first & 0x80:
            status = reader.u8()
            if status < 0xF0:
                running_status = status
        else:
            if running_status is None:
                raise MidiParseError(status_pos, "data byte without running status")
            status = running_status

        kind = status & 0xF0
        channel = status & 0x0F
        if kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
            d1 = reader.u8("event data")
            d2 = reader.u8("event data")
            if d1 & 0x80 or d2 & 0x80:
                raise MidiParseError(reader.pos - 1, "invalid data byte")
            if kind == 0x90 and d2 > 0:
                # A re-struck pitch closes the sounding note (last-on wins).
                close(channel, d1, tick)
                active[(channel, d1)] = (tick, d2)
            elif kind == 0x80 or kind == 0x90:
                close(channel, d1, tick)
            else:
                controls.append((tick, bytes((status, d1, d2))))
        elif kind in (0xC0, 0xD0):
            d1 = reader.u8("event data")
            if d1 & 0x80:
                raise MidiParseError(reader.pos - 1, "invalid data byte")
            controls.append((tick, bytes((status, d1))))
        elif status in (0xF0, 0xF7):
            length = reader.vlq()
            reader.take(length, "sysex payload")
        elif status == 0xFF:
            meta_type = reader.u8("meta type")
            length = reader.vlq()
            payload = reader.take(length, "meta payload")
            if meta_type == 0x2F:
                break  # end of track; any padding after it is ignored
            if meta_type == 0x51:
                if length != 3:
                    raise MidiParseError(status_pos, "bad tempo length")
                us = int.from_bytes(payload, "big")
                if us == 0:
                    raise MidiParseError(status_pos, "zero tempo")
                tempos.append((tick, us))
            elif meta_type == 0x58:
                if length < 2:
                    raise MidiParseError(status_pos, "bad time-signature length")
                timesigs.append((tick, payload[0], 1 << payload[1]))
        else:
            raise MidiParseError(status_pos, f"unexpected status byte 0x{status:02X}")

    for channel, pitch in list(active):
        close(channel, pitch, tick)
    return notes, tempos, timesigs, controls


def parse_midi(data: bytes) -> NoteSequence:
    """Parse SMF bytes (format 0 or 1) into a NoteSequence.

    Raises MidiParseError for anything malformed; never raises another
    exception type on arbitrary input.
    """
    reader = _Reader(data)
    magic = reader.take(4, "header") if len(data) >= 4 else None
    if magic != _HEADER_MAGIC:
        raise MidiParseError(0, "missing MThd header")
    header_len = reader.u32("header length")
    if header_len < 6:
        raise MidiParseError(4, f"header length {header_len} < 6")
    fmt = reader.u16("header format")
    ntrks = reader.u16("header track count")
    division = reader.u16("header division")
    if fmt not in (0, 1):
        raise MidiParseError(8, f"unsupported SMF format {fmt}")
    if division & 0x8000:
        raise MidiParseError(12, "SMPTE division not supported")
    if division == 0:
        raise MidiParseError(12, "zero ticks-per-quarter")
    reader.take(header_len - 6, "header extension")

    raw_notes: list[tuple[int, int, int, int, int]] = []
    tempos: list[tuple[int, int]] = []
    timesigs: list[tuple[int, int, int]] = []
    controls: list[tuple[int, bytes]] = []
    track_index = 0
    while track_index < ntrks:
        if reader.remaining() == 0:
            raise MidiParseError(
                reader.pos, f"expected {ntrks} tracks, found {track_index}"
            )
        tag = reader.take(4, "chunk header")
        length = reader.u32("chunk length")
        body_start = reader.pos
        body_end = body_start + length
        if body_end > len(data):
            raise MidiParseError(body_start, "truncated chunk")
        if tag != _TRACK_MAGIC:
            reader.pos = body_end  # unknown chunk types are skipped
            continue
        track_reader = _Reader(data, body_start, body_end)
        t_notes, t_tempos, t_sigs, t_controls = _parse_track(track_reader)
        raw_notes.extend((s, e, p, v, track_index) for s, e, p, v in t_notes)
        tempos.extend(t_tempos)
        timesigs.extend(t_sigs)
        controls.extend(t_controls)
        reader.pos = body_end
        track_index += 1

    timing = TimingMap(
        ppq=division,
        tempo_changes=_normalize_changes(tempos, (0, DEFAULT_TEMPO)),
        time_signatures=_normalize_changes(timesigs, (0, *DEFAULT_TIME_SIGNATURE)),
    )
    notes = [
        NoteEvent(
            onset=timing.seconds_at_tick(s),
            duration=timing.seconds_at_tick(e) - timing.seconds_at_tick(s),
            pitch=p,
            velocity=v,
            track=trk,
        )
        for s, e, p, v, trk in raw_notes
    ]
    controls.sort(key=lambda c: c[0])
    return NoteSequence(notes=notes, timing=timing, controls=controls)


def _normalize_changes(changes: list, default: tuple) -> list:
    """Sort by tick, keep the last entry per tick, ensure one at tick 0."""
    out: dict[int, tuple] = {}
    for change in sorted(changes, key=lambda c: c[0]):
        out[change[0]] = change
    if 0 not in out:
        out[0] = default
    return [out[t] for t in sorted(out)]


def write_midi(seq: NoteSequence) -> bytes:
    """Serialize to a format-0 SMF byte string.

    Note times are quantized to the sequence's PPQ grid; a re-parse
    reproduces the sequence up to one tick of onset/duration rounding.
    """
    timing = seq.timing
    if timing.ppq > 0x7FFF:
        raise MidiWriteError(f"ppq {timing.ppq} not representable")
    # (tick, priority, tiebreak, payload); priority orders same-tick events:
    # meta, controls, then note-offs before note-ons (pitch ascending).
    events: list[tuple[int, int, int, bytes]] = []
    if timing.tempo_changes != [(0, DEFAULT_TEMPO)]:
        for tick, us in timing.tempo_changes:
            events.append((tick, 0, 0, b"\xff\x51\x03" + us.to_bytes(3, "big")))
    if timing.time_signatures != [(0, *DEFAULT_TIME_SIGNATURE)]:
        for tick, num, den in timing.time_signatures:
            dd = (den - 1).bit_length()
            if 1 << dd != den or not 1 <= num <= 255:
                raise MidiWriteError(f"time signature {num}/{den} not representable")
            events.append((tick, 0, 1, bytes((0xFF, 0x58, 0x04, num, dd, 24, 8))))
    for tick, payload in seq.controls:
        events.append((tick, 1, 0, payload))
    for note in seq.notes:
        on_tick = round(timing.tick_at_seconds(note.onset))
        off_tick = round(timing.tick_at_seconds(note.end))
        if off_tick <= on_tick:
            off_tick = on_tick + 1
        if on_tick > _MAX_VLQ or off_tick > _MAX_VLQ:
            raise MidiWriteError(f"note at {note.onset}s outside tick range")
        events.append((off_tick, 2, note.pitch, bytes((0x80, note.pitch, 0x40))))
        events.append((on_tick, 3, note.pitch, bytes((0x90, note.pitch, note.velocity))))

    events.sort(key=lambda e: (e[0], e[1], e[2]))
    body = bytearray()
    prev_tick = 0
    for tick, _, _, payload in events:
        body += _encode_vlq(tick - prev_tick)
        body += payload
        prev_tick = tick
    body += _encode_vlq(0) + b"\xff\x2f\x00"

    header = (
        _HEADER_MAGIC
        + (6).to_bytes(4, "big")
        + (0).to_bytes(2, "big")
        + (1).to_bytes(2, "big")
        + timing.ppq.to_bytes(2, "big")
    )
    return header + _TRACK_MAGIC + len(body).to_bytes(4, "big") + bytes(body)
