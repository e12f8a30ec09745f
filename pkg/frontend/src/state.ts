/** Pure view-model derivation: the console renders exactly the session
 * payload and never mutates candidates or invents state of its own. */

import type { SessionView } from "./types.js";

export type Mode = "connecting" | "idle" | "confirm" | "describe" | "done";

export interface CounterRow {
  label: string;
  value: string;
}

export interface UiModel {
  mode: Mode;
  statusLine: string;
  questionText: string;
  goalText: string | null;
  yesNoEnabled: boolean;
  textEntryEnabled: boolean;
  grammarHint: string | null;
  counters: CounterRow[];
  candidates: SessionView["candidates"];
  placements: Array<[string, string]>;
  doors: Array<[string, string]>;
  finalCompletion: string | null;
}

function formatRate(rate: number | undefined): string {
  if (rate === undefined) return "-";
  return `${(rate * 100).toFixed(1)}%`;
}

export function uiModel(view: SessionView | null): UiModel {
  if (view === null) {
    return {
      mode: "connecting",
      statusLine: "connecting to session...",
      questionText: "",
      goalText: null,
      yesNoEnabled: false,
      textEntryEnabled: false,
      grammarHint: null,
      counters: [],
      candidates: [],
      placements: [],
      doors: [],
      finalCompletion: null,
    };
  }
  const metrics = view.metrics ?? {};
  const counters: CounterRow[] = [
    { label: "retrieved", value: String(metrics.retrieved ?? 0) },
    { label: "proposed", value: String(metrics.proposed ?? 0) },
    { label: "sourced", value: String(metrics.sourced ?? 0) },
    { label: "tokens", value: String(metrics.total_tokens ?? 0) },
    { label: "instructions", value: String(metrics.instructions ?? 0) },
    { label: "words", value: String(metrics.user_words ?? 0) },
    { label: "completion", value: formatRate(metrics.completion_rate) },
  ];
  const placements = Object.entries(view.world?.placements ?? {});
  const doors = Object.entries(view.world?.doors ?? {});
  const done = view.status === "done";
  const question = view.question;

  let mode: Mode = "idle";
  if (done) mode = "done";
  else if (question?.kind === "confirm") mode = "confirm";
  else if (question?.kind === "describe") mode = "describe";

  return {
    mode,
    statusLine: done
      ? `run finished - completion ${formatRate(metrics.completion_rate)}`
      : view.current_object
        ? `working on ${view.current_object}`
        : "running",
    questionText: question?.text ?? "",
    goalText: question?.goal_text ?? null,
    yesNoEnabled: mode === "confirm",
    textEntryEnabled: mode === "describe",
    grammarHint: mode === "describe" ? "the goal is that ..." : null,
    counters,
    candidates: view.candidates ?? [],
    placements,
    doors,
    finalCompletion: done ? formatRate(metrics.completion_rate) : null,
  };
}

/** Validate a free-text goal before submission: the pipeline re-asks on
 * anything unparseable, so catch the obvious case early. */
export function looksLikeGoal(text: string): boolean {
  return text.trim().toLowerCase().startsWith("the goal is that ");
}
