/** Pure view-model derivation: the console renders exactly the session
 * payload and never mutates candidates or invents state of its own. */
function formatRate(rate) {
    if (rate === undefined)
        return "-";
    return `${(rate * 100).toFixed(1)}%`;
}
export function uiModel(view) {
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
    const counters = [
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
    let mode = "idle";
    if (done)
        mode = "done";
    else if (question?.kind === "confirm")
        mode = "confirm";
    else if (question?.kind === "describe")
        mode = "describe";
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
export function looksLikeGoal(text) {
    return text.trim().toLowerCase().startsWith("the goal is that ");
}
