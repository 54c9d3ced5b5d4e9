// Event-stream client over plain fetch.
//
// EventSource cannot send an Authorization header, so this reads the
// streaming response body directly and parses the text/event-stream frames
// itself. On any drop it reconnects and resumes from the caller's last
// applied sequence number, which together with the reducer's dedup makes
// reconnection overlap harmless.

import type { Connection } from "./reducer.js";
import type { MutationEvent } from "./types.js";

export interface StreamOptions {
  baseUrl: string;
  token: string;
  /** Resume point, asked for at every (re)connect. */
  afterSeq: () => number;
  onEvent: (e: MutationEvent) => void;
  onConnection: (c: Connection) => void;
  /** Called for a non-retryable response (e.g. the token expired). */
  onFatal?: (status: number) => void;
  /** Initial reconnect delay in ms; doubles up to 16x. */
  retryDelayMs?: number;
}

function parseFrames(buffer: string, emit: (e: MutationEvent) => void): string {
  let rest = buffer;
  for (;;) {
    const cut = rest.indexOf("\n\n");
    if (cut < 0) return rest;
    const frame = rest.slice(0, cut);
    rest = rest.slice(cut + 2);
    const dataLines = frame
      .split("\n")
      .filter((line) => line.startsWith("data:"))
      .map((line) => line.slice(5).trim());
    if (dataLines.length > 0) {
      emit(JSON.parse(dataLines.join("\n")) as MutationEvent);
    }
  }
}

export class EventStreamClient {
  private controller: AbortController | null = null;
  private stopped = false;

  constructor(private readonly opts: StreamOptions) {}

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
    this.opts.onConnection("offline");
  }

  private async loop(): Promise<void> {
    const base = this.opts.retryDelayMs ?? 250;
    let delay = base;
    while (!this.stopped) {
      try {
        await this.followOnce();
        delay = base; // the connection worked; reset the backoff
      } catch {
        // fall through to the retry wait
      }
      if (this.stopped) return;
      this.opts.onConnection("reconnecting");
      await new Promise((resolve) => setTimeout(resolve, delay));
      delay = Math.min(delay * 2, base * 16);
    }
  }

  private async followOnce(): Promise<void> {
    this.controller = new AbortController();
    const resp = await fetch(
      `${this.opts.baseUrl}/api/events?after_seq=${this.opts.afterSeq()}`,
      {
        headers: { Authorization: `Bearer ${this.opts.token}` },
        signal: this.controller.signal,
      },
    );
    if (resp.status === 401 || resp.status === 403) {
      this.stopped = true;
      this.opts.onConnection("offline");
      this.opts.onFatal?.(resp.status);
      return;
    }
    if (!resp.ok || !resp.body) {
      throw new Error(`stream rejected: ${resp.status}`);
    }
    this.opts.onConnection("live");
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      buffer = parseFrames(buffer, this.opts.onEvent);
    }
  }
}
