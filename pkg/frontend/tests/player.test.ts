import { describe, expect, it } from "vitest";

import { AudioSink, Player } from "../src/player.js";
import type { NoteData } from "../src/types.js";

class FakeSink implements AudioSink {
  available = true;
  time = 0;
  scheduled: { pitch: number; when: number }[] = [];
  stops = 0;

  now(): number {
    return this.time;
  }

  scheduleNote(note: NoteData, when: number): void {
    this.scheduled.push({ pitch: note.pitch, when });
  }

  stopAll(): void {
    this.stops++;
    this.scheduled = [];
  }
}

function note(onset: number, pitch: number): NoteData {
  return { onset_s: onset, duration_s: 0.5, pitch, velocity: 80 };
}

const ORIGINAL = [note(0, 60), note(1, 62), note(2, 64)];
const PERFORMANCE = [note(0, 40), note(0.5, 45), note(3, 50)];

function loadedPlayer(sink: FakeSink): Player {
  const player = new Player(sink);
  player.load("original", ORIGINAL);
  player.load("performance", PERFORMANCE);
  return player;
}

describe("Player", () => {
  it("seek semantics: first sounded note has onset >= t", () => {
    const sink = new FakeSink();
    const player = loadedPlayer(sink);
    player.play("original", 0.8);
    expect(Math.min(...sink.scheduled.map((s) => s.when))).toBeCloseTo(0.2);
    expect(sink.scheduled.map((s) => s.pitch)).toEqual([62, 64]);
    expect(player.firstSoundedOnset("original", 0.8)).toBe(1);
  });

  it("A/B toggle: starting one lane silences the other", () => {
    const sink = new FakeSink();
    const player = loadedPlayer(sink);
    player.play("original", 0);
    expect(sink.scheduled).toHaveLength(3);
    player.play("performance", 0);
    // stopAll cleared the original's notes before scheduling the new lane
    expect(sink.stops).toBe(2);
    expect(sink.scheduled.map((s) => s.pitch)).toEqual([40, 45, 50]);
    expect(player.snapshot().lane).toBe("performance");
  });

  it("stop freezes the playhead at the stop time", () => {
    const sink = new FakeSink();
    const player = loadedPlayer(sink);
    player.play("original", 1.0);
    sink.time = 0.75;
    const state = player.stop();
    expect(state.playing).toBe(false);
    expect(state.position).toBeCloseTo(1.75);
    sink.time = 5.0;
    expect(player.position()).toBeCloseTo(1.75);
  });

  it("seek while playing restarts from the new position", () => {
    const sink = new FakeSink();
    const player = loadedPlayer(sink);
    player.play("performance", 0);
    sink.scheduled = [];
    sink.time = 1.0;
    player.seek(2.5);
    expect(player.position()).toBeCloseTo(2.5);
    expect(sink.scheduled.map((s) => s.pitch)).toEqual([50]);
  });

  it("reports a warning when audio is unavailable", () => {
    const sink = new FakeSink();
    sink.available = false;
    const player = loadedPlayer(sink);
    const state = player.play("original", 0);
    expect(state.audioWarning).toBe(true);
    expect(state.playing).toBe(true); // visual-only playback continues
  });
});
