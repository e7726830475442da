/** Server-sent-event subscription with cursor resume.
 *
 * Implemented over fetch streaming instead of window.EventSource so the same
 * code runs in the browser and under node tests; reconnecting with the last
 * delivered cursor never loses or duplicates events.
 */

import type { TranscriptEvent } from "./api.js";

export interface StreamHandle {
  close(): void;
  done: Promise<void>;
}

interface SseFrame {
  id?: string;
  event?: string;
  data?: string;
}

function parseFrame(block: string): SseFrame {
  const frame: SseFrame = {};
  for (const line of block.split("\n")) {
    const sep = line.indexOf(": ");
    if (sep < 0) continue;
    const field = line.slice(0, sep);
    const value = line.slice(sep + 2);
    if (field === "id") frame.id = value;
    else if (field === "event") frame.event = value;
    else if (field === "data") frame.data = (frame.data ?? "") + value;
  }
  return frame;
}

export function subscribeEvents(
  baseUrl: string,
  sessionId: string,
  cursor: number,
  onEvent: (event: TranscriptEvent) => void,
  onEnd?: () => void,
): StreamHandle {
  const controller = new AbortController();
  let next = cursor;

  const done = (async () => {
    const response = await fetch(
      `${baseUrl}/sessions/${sessionId}/events?cursor=${next}`,
      { signal: controller.signal },
    );
    if (!response.ok || response.body === null) {
      throw new Error(`event stream failed: ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { value, done: eof } = await reader.read();
      if (eof) break;
      buffer += decoder.decode(value, { stream: true });
      let split;
      while ((split = buffer.indexOf("\n\n")) >= 0) {
        const frame = parseFrame(buffer.slice(0, split));
        buffer = buffer.slice(split + 2);
        if (frame.event === "end") {
          controller.abort();
          onEnd?.();
          return;
        }
        if (frame.data !== undefined) {
          const event = JSON.parse(frame.data) as TranscriptEvent;
          if (event.index < next) continue; // guard against duplicates
          next = event.index + 1;
          onEvent(event);
        }
      }
    }
    onEnd?.();
  })().catch((err: unknown) => {
    if ((err as Error).name !== "AbortError") throw err;
  });

  return {
    close: () => controller.abort(),
    done,
  };
}

/** Collect every event from `cursor` until the stream ends (finished sessions). */
export async function collectEvents(
  baseUrl: string,
  sessionId: string,
  cursor = 0,
): Promise<TranscriptEvent[]> {
  const out: TranscriptEvent[] = [];
  await new Promise<void>((resolve, reject) => {
    const handle = subscribeEvents(
      baseUrl,
      sessionId,
      cursor,
      (event) => out.push(event),
      resolve,
    );
    handle.done.catch(reject);
  });
  return out;
}
