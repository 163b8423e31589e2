/** Scripted end-to-end session against the real backend.
 *
 * Builds a fixture corpus, launches the API server, performs the matching
 * flow (load segment, fetch candidates, adjust window, save), then restarts
 * the server process and verifies the pair persisted.
 */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { WorkbenchSession } from "../src/state.js";

const PORT = 8700 + (process.pid % 800);
const BASE = `http://127.0.0.1:${PORT}`;

let corpusDir: string;
let server: ChildProcess | null = null;

function startServer(): ChildProcess {
  const child = spawn(
    "python3",
    ["-m", "overpaint.cli", "serve", "--manifest", corpusDir, "--port", String(PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  child.stderr?.on("data", () => {});
  return child;
}

async function waitForServer(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/standards`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("server did not become ready");
}

async function stopServer(child: ChildProcess): Promise<void> {
  const exited = new Promise<void>((resolve) => child.once("exit", () => resolve()));
  child.kill("SIGTERM");
  await Promise.race([
    exited,
    new Promise<void>((resolve) => setTimeout(resolve, 5000)),
  ]);
  if (child.exitCode === null) child.kill("SIGKILL");
  await exited;
}

beforeAll(async () => {
  corpusDir = mkdtempSync(join(tmpdir(), "workbench-session-"));
  execFileSync("python3", [
    "-m", "overpaint.synthdata", corpusDir, "--seed", "5", "--no-pairs",
  ]);
  server = startServer();
  await waitForServer();
}, 120_000);

afterAll(async () => {
  if (server) await stopServer(server);
  rmSync(corpusDir, { recursive: true, force: true });
}, 60_000);

describe("scripted matching session", () => {
  it("loads, matches, saves, and survives a server restart", async () => {
    const api = new ApiClient(BASE);
    const session = new WorkbenchSession(api);

    // load a segment
    await session.start();
    expect(session.state.standards.length).toBeGreaterThan(0);
    await session.selectStandard(session.state.standards[0].id);
    expect(session.state.segments.length).toBeGreaterThan(0);
    const segment = session.selectSegment(session.state.segments[0].id);
    expect(segment.notes.length).toBeGreaterThan(0);
    session.selectPerformance("perf-00");

    // fetch candidates; the fixture plants an exact copy at [1, 9]
    const candidates = await session.fetchCandidates(5);
    expect(candidates[0].value).toBe(1.0);
    session.applyCandidate(0);
    expect(session.state.window).toEqual({ start_s: 1.0, end_s: 9.0 });

    // adjust the window (drag right edge out, then snap back)
    session.adjustWindow({ start_s: 1.0, end_s: 9.22 }, true);
    expect(session.state.window?.end_s).toBeCloseTo(9.2);
    session.adjustWindow({ start_s: 1.0, end_s: 9.0 });

    // save -> 201, list refreshed
    const saved = await session.savePair("scripted-session");
    expect(saved).not.toBeNull();
    expect(session.state.pairs.map((p) => p.id)).toContain(saved!.id);

    // duplicate save surfaces a conflict without losing anything
    const dup = await session.savePair("scripted-session");
    expect(dup).toBeNull();
    expect(session.state.banner?.kind).toBe("error");
    expect(session.state.pairs).toHaveLength(1);

    // the review endpoint reports a perfect match for the planted window
    const review = await api.reviewPair(saved!.id);
    expect(review.average_deviation).toBe(0.0);

    // restart the server process; the pair must persist
    await stopServer(server!);
    server = startServer();
    await waitForServer();

    const fresh = new WorkbenchSession(new ApiClient(BASE));
    await fresh.start();
    expect(fresh.state.pairs.map((p) => p.id)).toContain(saved!.id);

    // MIDI payload of the saved variation is still served byte-identically
    const midi = await fetch(`${BASE}/api/midi/${saved!.variation_id}`);
    expect(midi.status).toBe(200);
    const bytes = new Uint8Array(await midi.arrayBuffer());
    expect(bytes.length).toBeGreaterThan(20);
    expect(String.fromCharCode(...bytes.slice(0, 4))).toBe("MThd");
  }, 180_000);
});
