/** Minimal incremental parser for a text/event-stream body. */
export class SseParser {
    constructor() {
        this.buffer = "";
    }
    /** Feed one chunk; returns the data payloads of any completed events. */
    feed(chunk) {
        this.buffer += chunk;
        const events = [];
        let index;
        while ((index = this.buffer.indexOf("\n\n")) !== -1) {
            const raw = this.buffer.slice(0, index);
            this.buffer = this.buffer.slice(index + 2);
            const data = raw
                .split("\n")
                .filter((line) => line.startsWith("data: "))
                .map((line) => line.slice("data: ".length))
                .join("\n");
            if (data)
                events.push(data);
        }
        return events;
    }
}
