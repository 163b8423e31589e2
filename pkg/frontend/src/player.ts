/** Client-side note playback with an exclusive A/B lane toggle.
 *
 * Scheduling logic is separated from WebAudio behind AudioSink so it can be
 * tested with a fake clock; when audio is unavailable the player degrades to
 * visual-only playback and reports a warning.
 */

import type { NoteData } from "./types.js";

export interface AudioSink {
  readonly available: boolean;
  now(): number;
  scheduleNote(note: NoteData, when: number, duration: number): void;
  stopAll(): void;
}

export class SilentSink implements AudioSink {
  readonly available = false;

  now(): number {
    return performance.now() / 1000;
  }

  scheduleNote(): void {}

  stopAll(): void {}
}

/** Oscillator-per-note synthesis with a short attack/release envelope. */
export class WebAudioSink implements AudioSink {
  readonly available = true;
  private active: { osc: OscillatorNode; gain: GainNode }[] = [];

  constructor(private readonly context: AudioContext) {}

  now(): number {
    return this.context.currentTime;
  }

  scheduleNote(note: NoteData, when: number, duration: number): void {
    const osc = this.context.createOscillator();
    const gain = this.context.createGain();
    osc.type = "triangle";
    osc.frequency.value = 440 * Math.pow(2, (note.pitch - 69) / 12);
    const peak = 0.25 * (note.velocity / 127);
    gain.gain.setValueAtTime(0, when);
    gain.gain.linearRampToValueAtTime(peak, when + 0.01);
    gain.gain.setValueAtTime(peak, Math.max(when + 0.01, when + duration - 0.03));
    gain.gain.linearRampToValueAtTime(0, when + duration);
    osc.connect(gain).connect(this.context.destination);
    osc.start(when);
    osc.stop(when + duration + 0.05);
    this.active.push({ osc, gain });
    osc.onended = () => {
      this.active = this.active.filter((entry) => entry.osc !== osc);
    };
  }

  stopAll(): void {
    for (const { osc, gain } of this.active) {
      try {
        gain.gain.cancelScheduledValues(0);
        gain.gain.value = 0;
        osc.stop();
      } catch {
        // already stopped
      }
    }
    this.active = [];
  }
}

export type LaneName = "original" | "performance";

export interface PlaybackState {
  lane: LaneName | null;
  playing: boolean;
  /** Frozen at the stop position when not playing. */
  position: number;
  audioWarning: boolean;
}

export class Player {
  private lanes = new Map<LaneName, NoteData[]>();
  private startedAt = 0;
  private startOffset = 0;
  private state: PlaybackState = {
    lane: null,
    playing: false,
    position: 0,
    audioWarning: false,
  };

  constructor(private readonly sink: AudioSink) {}

  load(lane: LaneName, notes: NoteData[]): void {
    this.lanes.set(
      lane,
      [...notes].sort((a, b) => a.onset_s - b.onset_s),
    );
  }

  /** Start one lane from a position; any other lane is silenced first. */
  play(lane: LaneName, from = 0): PlaybackState {
    this.sink.stopAll();
    const notes = this.lanes.get(lane) ?? [];
    const base = this.sink.now();
    let scheduled = 0;
    for (const note of notes) {
      if (note.onset_s < from) continue; // first sounded onset >= seek point
      this.sink.scheduleNote(note, base + (note.onset_s - from), note.duration_s);
      scheduled++;
    }
    this.startedAt = base;
    this.startOffset = from;
    this.state = {
      lane,
      playing: true,
      position: from,
      audioWarning: !this.sink.available && scheduled >= 0,
    };
    return this.state;
  }

  /** Freeze and return the playhead. */
  stop(): PlaybackState {
    if (this.state.playing) {
      const frozen = this.position();
      this.sink.stopAll();
      this.state = { ...this.state, playing: false, position: frozen };
    }
    return this.state;
  }

  seek(to: number): PlaybackState {
    if (this.state.playing && this.state.lane) {
      return this.play(this.state.lane, to);
    }
    this.state = { ...this.state, position: Math.max(0, to) };
    return this.state;
  }

  position(): number {
    if (!this.state.playing) return this.state.position;
    return this.startOffset + (this.sink.now() - this.startedAt);
  }

  snapshot(): PlaybackState {
    return { ...this.state, position: this.position() };
  }

  firstSoundedOnset(lane: LaneName, from: number): number | null {
    const notes = this.lanes.get(lane) ?? [];
    for (const note of notes) {
      if (note.onset_s >= from) return note.onset_s;
    }
    return null;
  }
}
