/** DOM wiring: render the session view, forward clicks and typed goals. */
import { fetchSession, submitAnswer, subscribeEvents } from "./api.js";
import { looksLikeGoal, uiModel } from "./state.js";
const BASE = "";
function el(id) {
    const node = document.getElementById(id);
    if (!node)
        throw new Error(`missing element #${id}`);
    return node;
}
let submitting = false;
function render(model) {
    el("status").textContent = model.statusLine;
    el("question").textContent = model.questionText || "(no question pending)";
    const yes = el("answer-yes");
    const no = el("answer-no");
    yes.disabled = no.disabled = !model.yesNoEnabled || submitting;
    const entry = el("goal-entry");
    const send = el("goal-send");
    entry.disabled = send.disabled = !model.textEntryEnabled || submitting;
    el("grammar-hint").textContent = model.grammarHint ?? "";
    const counters = el("counters");
    counters.innerHTML = "";
    for (const row of model.counters) {
        const item = document.createElement("div");
        item.className = "counter";
        item.innerHTML = `<span class="value"></span><span class="label"></span>`;
        item.querySelector(".value").textContent = row.value;
        item.querySelector(".label").textContent = row.label;
        counters.appendChild(item);
    }
    const candidates = el("candidates");
    candidates.innerHTML = "";
    for (const candidate of model.candidates) {
        const row = document.createElement("li");
        row.className = candidate.viable === false ? "candidate unviable" : "candidate";
        const verdict = candidate.viable === null ? "" : candidate.viable ? " [viable]" : ` [${candidate.mismatch}]`;
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
async function answer(text) {
    submitting = true;
    applyView(lastView);
    const result = await submitAnswer(BASE, text);
    submitting = false;
    if (!result.ok) {
        showError(result.error ?? "submission rejected");
    }
    applyView(lastView);
}
function showError(message) {
    const banner = el("banner");
    banner.textContent = message;
    banner.hidden = false;
}
let lastView = null;
function applyView(view) {
    lastView = view;
    render(uiModel(view));
}
function wire() {
    el("answer-yes").addEventListener("click", () => void answer("yes"));
    el("answer-no").addEventListener("click", () => void answer("no"));
    const entry = el("goal-entry");
    el("goal-send").addEventListener("click", () => {
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
