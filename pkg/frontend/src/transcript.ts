/** Pure transcript view-model: event stream in, render-ready feed out.
 *
 * Engine-origin strings pass through byte-identical; the view only decides
 * placement and color class. Rebuilding from a prefix of the stream at any
 * cursor reconstructs exactly the feed a live client would have shown.
 */

import type { EpisodeScore, TranscriptEvent } from "./api.js";

export type FeedKind =
  | "observation"
  | "thought"
  | "action"
  | "feedback-ok"
  | "feedback-fail"
  | "chat"
  | "ask"
  | "human-answer"
  | "goal"
  | "system";

export interface FeedItem {
  index: number;
  step: number;
  agent: string;
  kind: FeedKind;
  /** Engine-origin text, displayed verbatim. */
  text: string;
  /** Short label for the left gutter ("Alice", "System", ...). */
  label: string;
}

function asString(value: unknown): string {
  return typeof value === "string" ? value : JSON.stringify(value);
}

export function toFeedItem(event: TranscriptEvent): FeedItem | null {
  const payload = event.payload;
  const base = {
    index: event.index,
    step: event.step,
    agent: event.agent,
  };
  switch (event.kind) {
    case "observation":
      return { ...base, kind: "observation", label: event.agent, text: asString(payload.text) };
    case "thought":
      return { ...base, kind: "thought", label: event.agent, text: asString(payload.text) };
    case "action": {
      const args = (payload.args as string[]) ?? [];
      const name = asString(payload.name);
      const text = args.length ? `${name} [${args.join(", ")}]` : name;
      return { ...base, kind: "action", label: event.agent, text };
    }
    case "feedback": {
      const ok = payload.ok === true;
      return {
        ...base,
        kind: ok ? "feedback-ok" : "feedback-fail",
        label: "System",
        text: asString(payload.message),
      };
    }
    case "chat":
      return { ...base, kind: "chat", label: event.agent, text: asString(payload.message) };
    case "ask":
      return { ...base, kind: "ask", label: event.agent, text: asString(payload.message) };
    case "human_answer":
      return { ...base, kind: "human-answer", label: "Human", text: asString(payload.text) };
    case "goal_check": {
      const satisfied = payload.satisfied as number;
      const total = payload.total as number;
      return { ...base, kind: "goal", label: "System", text: `goal ${satisfied}/${total}` };
    }
    case "system": {
      const subkind = asString(payload.subkind ?? "system");
      if (subkind === "setup") return null; // handshake noise
      const text = asString(payload.text ?? payload.raw ?? "");
      return { ...base, kind: "system", label: "System", text };
    }
    default:
      return { ...base, kind: "system", label: "System", text: JSON.stringify(payload) };
  }
}

/** Feed for the first `cursor` events (the whole stream when omitted). */
export function buildFeed(events: TranscriptEvent[], cursor?: number): FeedItem[] {
  const slice = cursor === undefined ? events : events.filter((e) => e.index < cursor);
  const feed: FeedItem[] = [];
  for (const event of slice) {
    const item = toFeedItem(event);
    if (item !== null) feed.push(item);
  }
  return feed;
}

/** Chats addressed to everyone else, in arrival order (the chat pane). */
export function chatLog(events: TranscriptEvent[]): FeedItem[] {
  return buildFeed(events).filter((item) => item.kind === "chat" || item.kind === "human-answer");
}

/** Pending ask question, if the last ask has no answer yet. */
export function pendingAsk(events: TranscriptEvent[]): FeedItem | null {
  let open: FeedItem | null = null;
  for (const event of events) {
    if (event.kind === "ask") open = toFeedItem(event);
    else if (event.kind === "human_answer") open = null;
  }
  return open;
}

export interface ScoreRow {
  label: string;
  value: string;
}

export function scorePanel(score: EpisodeScore | null): ScoreRow[] {
  if (score === null) return [];
  const rows: ScoreRow[] = [
    { label: "Success", value: score.success ? "yes" : "no" },
    { label: "Goal-SR", value: score.goal_sr.toFixed(2) },
    { label: "Steps", value: String(score.steps) },
    { label: "LLM calls", value: String(score.llm_calls) },
  ];
  if (score.misplaced_pct !== null) {
    rows.push({ label: "Misplaced %", value: score.misplaced_pct.toFixed(1) });
  }
  if (score.fixed_strict_pct !== null) {
    rows.push({ label: "Fixed Strict %", value: score.fixed_strict_pct.toFixed(1) });
  }
  if (score.answer_correct !== null) {
    rows.push({ label: "Answer", value: score.answer_correct ? "correct" : "wrong" });
  }
  if (score.expert_len !== null) {
    rows.push({ label: "Expert length", value: String(score.expert_len) });
  }
  return rows;
}
