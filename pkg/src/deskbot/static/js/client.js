// Network glue: command POSTs and the NDJSON telemetry stream with
// reconnect. Drive commands are only ever sent from user gestures; the
// reconnect loop re-subscribes the session but never re-issues motion.
import { parseFrame, subscribeCommand } from "./protocol.js";
export function backoffDelayMs(attempt) {
    return Math.min(500 * 2 ** attempt, 8000);
}
export class ApiClient {
    constructor(base = "") {
        this.base = base;
    }
    async command(body) {
        const resp = await fetch(`${this.base}/api/command`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        return (await resp.json());
    }
    subscribe() {
        return this.command(subscribeCommand());
    }
}
export class TelemetryStream {
    constructor(client, periodMs, handlers, base = "") {
        this.client = client;
        this.periodMs = periodMs;
        this.handlers = handlers;
        this.base = base;
        this.stopped = false;
        this.controller = null;
    }
    /** Subscribe, stream frames, and keep reconnecting with backoff until
     * stop() is called. Each (re)connection claims a fresh session; the
     * driver token follows whoever subscribes first. */
    async run() {
        let attempt = 0;
        while (!this.stopped) {
            try {
                const sub = await this.client.subscribe();
                if (!sub.ok || !sub.session) {
                    throw new Error(sub.error ?? "subscribe failed");
                }
                this.handlers.onEvent({
                    type: "subscribed",
                    session: sub.session,
                    driver: sub.driver === true,
                });
                await this.consume(sub.session);
                attempt = 0;
            }
            catch {
                // fall through to the backoff below
            }
            if (this.stopped)
                break;
            this.handlers.onEvent({ type: "reconnecting" });
            await sleep(backoffDelayMs(attempt));
            attempt += 1;
        }
        this.handlers.onEvent({ type: "closed" });
    }
    async consume(session) {
        this.controller = new AbortController();
        const url = `${this.base}/api/telemetry/stream?session=${session}&period_ms=${this.periodMs}`;
        const resp = await fetch(url, { signal: this.controller.signal });
        if (!resp.ok || resp.body === null) {
            throw new Error(`stream rejected: ${resp.status}`);
        }
        this.handlers.onEvent({ type: "connected" });
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
            const { done, value } = await reader.read();
            if (done)
                break;
            buffer += decoder.decode(value, { stream: true });
            let nl;
            while ((nl = buffer.indexOf("\n")) >= 0) {
                const line = buffer.slice(0, nl);
                buffer = buffer.slice(nl + 1);
                const frame = parseFrame(line);
                if (frame !== null) {
                    this.handlers.onEvent({ type: "frame", frame, wallMs: Date.now() });
                }
            }
        }
    }
    /** Drop the current stream so the run loop re-subscribes; claiming the
     * driver token works by disconnecting and subscribing again while it
     * is free. */
    reconnect() {
        this.controller?.abort();
    }
    stop() {
        this.stopped = true;
        this.controller?.abort();
    }
}
function sleep(ms) {
    return new Promise((resolve) => setTimeout(resolve, ms));
}
