/** Session API client: plain fetch for state and answers, fetch-streamed
 * server-sent events for updates (works in browsers and in node tests). */
import { SseParser } from "./sse.js";
export async function fetchSession(base) {
    const response = await fetch(`${base}/session`);
    if (!response.ok)
        throw new Error(`GET /session -> ${response.status}`);
    return (await response.json());
}
export async function submitAnswer(base, answer) {
    const response = await fetch(`${base}/session/answer`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ answer }),
    });
    if (response.status === 202)
        return { ok: true };
    try {
        const payload = (await response.json());
        return { ok: false, error: payload.error ?? `status ${response.status}` };
    }
    catch {
        return { ok: false, error: `status ${response.status}` };
    }
}
/** Stream /events, invoking onView for every session payload.  The returned
 * promise resolves when the stream ends (error or close). */
export function subscribeEvents(base, onView, onError) {
    const controller = new AbortController();
    const parser = new SseParser();
    const finished = (async () => {
        try {
            const response = await fetch(`${base}/events`, { signal: controller.signal });
            if (!response.ok || response.body === null) {
                throw new Error(`GET /events -> ${response.status}`);
            }
            const reader = response.body.getReader();
            const decoder = new TextDecoder();
            for (;;) {
                const { done, value } = await reader.read();
                if (done)
                    break;
                for (const data of parser.feed(decoder.decode(value, { stream: true }))) {
                    onView(JSON.parse(data));
                }
            }
        }
        catch (err) {
            if (!controller.signal.aborted && onError)
                onError(err);
        }
    })();
    return { close: () => controller.abort(), finished };
}
