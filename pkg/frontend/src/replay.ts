/** Replay viewer: scrub through a finished episode's transcript. */

import { GatewayClient, type EpisodeDocument } from "./api.js";
import { buildFeed, scorePanel } from "./transcript.js";

interface ReplayState {
  episode: EpisodeDocument | null;
  cursor: number;
}

const state: ReplayState = { episode: null, cursor: 0 };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function maxCursor(): number {
  return state.episode === null ? 0 : state.episode.events.length;
}

function renderTranscript(): void {
  const container = el<HTMLDivElement>("replay-feed");
  container.textContent = "";
  if (state.episode === null) return;
  for (const item of buildFeed(state.episode.events, state.cursor)) {
    const row = document.createElement("div");
    row.className = `feed-item ${item.kind}`;
    const label = document.createElement("span");
    label.className = "label";
    label.textContent = `${item.index} ${item.label}`;
    const text = document.createElement("span");
    text.className = "text";
    text.textContent = item.text;
    row.append(label, text);
    container.append(row);
  }
  el<HTMLSpanElement>("scrub-position").textContent = `${state.cursor}/${maxCursor()}`;
}

function renderSummary(): void {
  const panel = el<HTMLDivElement>("replay-score");
  panel.textContent = "";
  if (state.episode === null) return;
  const outcome = document.createElement("div");
  outcome.className = "score-outcome";
  outcome.textContent = state.episode.outcome;
  panel.append(outcome);
  for (const row of scorePanel(state.episode.score)) {
    const line = document.createElement("div");
    line.textContent = `${row.label}: ${row.value}`;
    panel.append(line);
  }
}

export function setCursor(cursor: number): void {
  state.cursor = Math.max(0, Math.min(cursor, maxCursor()));
  const scrubber = el<HTMLInputElement>("scrubber");
  scrubber.value = String(state.cursor);
  renderTranscript();
}

async function loadEpisode(): Promise<void> {
  const banner = el<HTMLDivElement>("replay-error");
  banner.textContent = "";
  const base = el<HTMLInputElement>("replay-gateway").value || "http://127.0.0.1:8712/v1";
  const sessionId = el<HTMLInputElement>("episode-id").value;
  try {
    const client = new GatewayClient(base);
    const episode = await client.episode(sessionId);
    if (episode.schema !== "langworld/episode@1") {
      throw new Error(`unsupported episode schema: ${episode.schema}`);
    }
    state.episode = episode;
  } catch (err) {
    state.episode = null;
    banner.textContent = String(err);
    renderTranscript();
    renderSummary();
    return;
  }
  const scrubber = el<HTMLInputElement>("scrubber");
  scrubber.max = String(maxCursor());
  setCursor(maxCursor());
  renderSummary();
}

export function wireReplayViewer(): void {
  el<HTMLButtonElement>("load-episode").addEventListener("click", () => void loadEpisode());
  el<HTMLInputElement>("scrubber").addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    setCursor(Number(target.value));
  });
  el<HTMLButtonElement>("step-back").addEventListener("click", () => setCursor(state.cursor - 1));
  el<HTMLButtonElement>("step-forward").addEventListener("click", () =>
    setCursor(state.cursor + 1),
  );
}

if (typeof document !== "undefined" && document.getElementById("load-episode") !== null) {
  wireReplayViewer();
}
