/** DOM wiring: render the session view, forward clicks and typed goals. */

import { fetchSession, submitAnswer, subscribeEvents } from "./api.js";
import { looksLikeGoal, uiModel, type UiModel } from "./state.js";
import type { SessionView } from "./types.js";

const BASE = "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let submitting = false;

function render(model: UiModel): void {
  el("status").textContent = model.statusLine;
  el("question").textContent = model.questionText || "(no question pending)";

  const yes = el<HTMLButtonElement>("answer-yes");
  const no = el<HTMLButtonElement>("answer-no");
  yes.disabled = no.disabled = !model.yesNoEnabled || submitting;

  const entry = el<HTMLInputElement>("goal-entry");
  const send = el<HTMLButtonElement>("goal-send");
  entry.disabled = send.disabled = !model.textEntryEnabled || submitting;
  el("grammar-hint").textContent = model.grammarHint ?? "";

  const counters = el("counters");
  counters.innerHTML = "";
  for (const row of model.counters) {
    const item = document.createElement("div");
    item.className = "counter";
    item.innerHTML = `<span class="value"></span><span class="label"></span>`;
    (item.querySelector(".value") as HTMLElement).textContent = row.value;
    (item.querySelector(".label") as HTMLElement).textContent = row.label;
    counters.appendChild(item);
  }

  const candidates = el("candidates");
  candidates.innerHTML = "";
  for (const candidate of model.candidates) {
    const row = document.createElement("li");
    row.className = candidate.viable === false ? "candidate unviable" : "candidate";
    const verdict =
      candidate.viable === null ? "" : candidate.viable ? " [viable]" : ` [${candidate.mismatch}]`;
    row.textContent = `${candidate.text} (${candidate.mean_probability.toFixed(3)})${verdict}`;
    candidates.appendChild(row);
  }

  const world = el("world");
  world.innerHTML = "";
  for (const [id, phrase] of model.placements) {
    const row = document.createElement("li");
    row.textContent = phrase === id.replace(/-\d+$/, "") ? id : `${id}: ${phrase}`;
    world.appendChild(row);
  }
  for (const [id, state] of model.doors) {
    const row = document.createElement("li");
    row.textContent = `${id}: door ${state}`;
    world.appendChild(row);
  }

  el("banner").hidden = true;
}

async function answer(text: string): Promise<void> {
  submitting = true;
  applyView(lastView);
  const result = await submitAnswer(BASE, text);
  submitting = false;
  if (!result.ok) {
    showError(result.error ?? "submission rejected");
  }
  applyView(lastView);
}

function showError(message: string): void {
  const banner = el("banner");
  banner.textContent = message;
  banner.hidden = false;
}

let lastView: SessionView | null = null;

function applyView(view: SessionView | null): void {
  lastView = view;
  render(uiModel(view));
}

function wire(): void {
  el<HTMLButtonElement>("answer-yes").addEventListener("click", () => void answer("yes"));
  el<HTMLButtonElement>("answer-no").addEventListener("click", () => void answer("no"));
  const entry = el<HTMLInputElement>("goal-entry");
  el<HTMLButtonElement>("goal-send").addEventListener("click", () => {
    const text = entry.value;
    if (!looksLikeGoal(text)) {
      showError('goal descriptions start with "the goal is that ..."');
      return;
    }
    entry.value = "";
    void answer(text);
  });

  render(uiModel(null));
  void fetchSession(BASE).then(applyView, () => showError("session API unreachable"));

  const connect = () => {
    subscribeEvents(BASE, applyView, () => {
      showError("connection lost - retrying");
      setTimeout(connect, 1000);
    });
  };
  connect();
}

if (typeof document !== "undefined") {
  wire();
}
