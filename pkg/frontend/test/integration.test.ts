/** Console round-trip against a real pipeline run (mini scenario, replay
 * provider): the confirm question appears, "yes" advances the run, five
 * "no" answers produce the free-text request, and a grammar-valid goal
 * completes the object. */

import assert from "node:assert/strict";
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import test from "node:test";

import { fetchSession, submitAnswer, subscribeEvents } from "../src/api.js";
import { looksLikeGoal, uiModel } from "../src/state.js";
import type { SessionView } from "../src/types.js";

const PORT = 8600 + (process.pid % 1000);
const BASE = `http://127.0.0.1:${PORT}`;
function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function waitFor<T>(
  predicate: () => Promise<T | null>,
  timeoutMs = 15000,
  stepMs = 50,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = await predicate().catch(() => null);
    if (value !== null) return value;
    if (Date.now() > deadline) throw new Error("timed out");
    await sleep(stepMs);
  }
}

async function questionWithSeqAbove(minSeq: number, kind?: string): Promise<SessionView> {
  return waitFor(async () => {
    const view = await fetchSession(BASE);
    const question = view.question;
    if (question && question.seq > minSeq && (kind === undefined || question.kind === kind)) {
      return view;
    }
    return null;
  });
}

function startPipeline(): ChildProcess {
  const outDir = mkdtempSync(join(tmpdir(), "console-run-"));
  const child = spawn(
    "python3",
    [
      "-m", "stars.cli", "run",
      "--scenario", "mini",
      "--condition", "stars+o",
      "--provider", "replay:mini",
      "--user", "ui",
      "--http-port", String(PORT),
      "--out", outDir,
    ],
    { cwd: join(import.meta.dirname ?? ".", "..", ".."), stdio: ["ignore", "pipe", "pipe"] },
  );
  return child;
}

test("console round-trip over the live session API", async () => {
  const child = startPipeline();
  const stderr: string[] = [];
  child.stderr?.on("data", (chunk) => stderr.push(String(chunk)));
  try {
    // Object one (mug): the confirm question is displayed.
    const first = await waitFor(async () => {
      const view = await fetchSession(BASE);
      return view.question?.kind === "confirm" ? view : null;
    });
    let model = uiModel(first);
    assert.equal(model.mode, "confirm");
    assert.match(model.questionText, /mug in the dish rack/);
    assert.ok(model.yesNoEnabled);
    assert.ok(model.candidates.length > 0, "candidate panel populated");
    const instructionsAtQ1 = first.metrics.instructions ?? 0;

    // A "yes" click advances the run to the next object.
    let seq = first.question!.seq;
    assert.deepEqual(await submitAnswer(BASE, "yes"), { ok: true });
    const second = await questionWithSeqAbove(seq, "confirm");
    model = uiModel(second);
    assert.match(model.questionText, /plate on the counter/);
    // The accepted answer was counted as exactly one instruction.
    assert.equal((second.metrics.instructions ?? 0) - instructionsAtQ1, 1);

    // Five "no" clicks exhaust the proposal budget ...
    seq = second.question!.seq;
    for (let i = 0; i < 5; i += 1) {
      assert.deepEqual(await submitAnswer(BASE, "no"), { ok: true });
      const next = await questionWithSeqAbove(seq);
      seq = next.question!.seq;
      if (i < 4) {
        assert.equal(next.question!.kind, "confirm", `rejection ${i + 1}`);
      } else {
        assert.equal(next.question!.kind, "describe");
        model = uiModel(next);
        assert.ok(model.textEntryEnabled, "free-text entry enabled");
        assert.equal(model.grammarHint, "the goal is that ...");
      }
    }

    // ... and a grammar-valid free-text goal completes the object.
    const goal = "the goal is that the plate is in the sink";
    assert.ok(looksLikeGoal(goal));
    assert.deepEqual(await submitAnswer(BASE, goal), { ok: true });

    const finished = await waitFor(async () => {
      const view = await fetchSession(BASE);
      return view.status === "done" ? view : null;
    });
    model = uiModel(finished);
    assert.equal(model.mode, "done");
    assert.equal(model.finalCompletion, "100.0%");
    assert.equal(finished.report?.completion_rate, 1);
  } catch (err) {
    throw new Error(`${String(err)}\npipeline stderr:\n${stderr.join("")}`);
  } finally {
    child.kill("SIGTERM");
    await sleep(200);
    child.kill("SIGKILL");
  }
});

test("event stream delivers session views", async () => {
  const child = startPipeline();
  try {
    await waitFor(async () => {
      const view = await fetchSession(BASE);
      return view.question ? view : null;
    });
    const views: SessionView[] = [];
    const subscription = subscribeEvents(BASE, (view) => views.push(view));
    await waitFor(async () => (views.length > 0 ? true : null), 5000);
    subscription.close();
    await subscription.finished;
    assert.ok(views[0].status.length > 0);
    assert.ok(views[0].question, "initial event carries the pending question");
  } finally {
    child.kill("SIGKILL");
  }
});
