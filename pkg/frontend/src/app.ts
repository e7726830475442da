/** Live playground: create a session, play a role, chat, answer asks. */

import { GatewayClient, type SessionDescriptor, type TranscriptEvent } from "./api.js";
import { subscribeEvents, type StreamHandle } from "./events.js";
import { canSend, composeActionText, humanPalette, paletteButtons } from "./palette.js";
import { buildFeed, pendingAsk, scorePanel, toFeedItem } from "./transcript.js";

interface AppState {
  client: GatewayClient;
  descriptor: SessionDescriptor | null;
  events: TranscriptEvent[];
  stream: StreamHandle | null;
}

const state: AppState = {
  client: new GatewayClient(gatewayBase()),
  descriptor: null,
  events: [],
  stream: null,
};

function gatewayBase(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("gateway") ?? "http://127.0.0.1:8712/v1";
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderFeed(): void {
  const feed = el<HTMLDivElement>("feed");
  feed.textContent = "";
  for (const item of buildFeed(state.events)) {
    const row = document.createElement("div");
    row.className = `feed-item ${item.kind}`;
    const label = document.createElement("span");
    label.className = "label";
    label.textContent = item.label;
    const text = document.createElement("span");
    text.className = "text";
    text.textContent = item.text; // engine strings are shown byte-identical
    row.append(label, text);
    feed.append(row);
  }
  feed.scrollTop = feed.scrollHeight;
}

function renderStatus(): void {
  const banner = el<HTMLDivElement>("status");
  const descriptor = state.descriptor;
  if (descriptor === null) {
    banner.textContent = "no session";
    banner.dataset.status = "idle";
    return;
  }
  banner.dataset.status = descriptor.status;
  const who = descriptor.waiting_human ? ` (${descriptor.waiting_human} to act)` : "";
  banner.textContent = `${descriptor.status}${who} — ${descriptor.instruction}`;
  el<HTMLButtonElement>("send").disabled = !canSend(descriptor);
  el<HTMLButtonElement>("send-chat").disabled = !canSend(descriptor);
}

function renderPalette(): void {
  const container = el<HTMLDivElement>("palette");
  container.textContent = "";
  if (state.descriptor === null) return;
  const palette = humanPalette(state.descriptor);
  if (palette === null) return;
  for (const button of paletteButtons(palette)) {
    const node = document.createElement("button");
    node.type = "button";
    node.textContent = button.name;
    node.title = button.description;
    node.addEventListener("click", () => {
      const input = el<HTMLInputElement>("action-arg");
      const args = button.needsArgument && input.value ? [input.value] : [];
      el<HTMLInputElement>("action-text").value = composeActionText(button.name, args);
    });
    container.append(node);
  }
}

function renderAskInbox(): void {
  const inbox = el<HTMLDivElement>("ask-inbox");
  const open = pendingAsk(state.events);
  inbox.textContent = "";
  if (open === null) {
    inbox.dataset.open = "false";
    return;
  }
  inbox.dataset.open = "true";
  const question = document.createElement("div");
  question.className = "ask-question";
  question.textContent = `${open.agent} asks: ${open.text}`;
  const field = document.createElement("input");
  field.id = "ask-answer";
  field.placeholder = "answer the agent";
  const send = document.createElement("button");
  send.textContent = "Answer";
  send.addEventListener("click", () => {
    void submit("answer", field.value);
    field.value = "";
  });
  inbox.append(question, field, send);
}

function renderScore(): void {
  const panel = el<HTMLDivElement>("score");
  panel.textContent = "";
  if (state.descriptor?.status !== "finished") return;
  void state.client.episode(state.descriptor.session_id).then((episode) => {
    const heading = document.createElement("div");
    heading.className = "score-outcome";
    heading.textContent = episode.outcome;
    panel.append(heading);
    for (const row of scorePanel(episode.score)) {
      const line = document.createElement("div");
      line.textContent = `${row.label}: ${row.value}`;
      panel.append(line);
    }
  });
}

function renderAll(): void {
  renderStatus();
  renderPalette();
  renderFeed();
  renderAskInbox();
  renderScore();
}

async function refreshDescriptor(): Promise<void> {
  if (state.descriptor === null) return;
  state.descriptor = await state.client.describeSession(state.descriptor.session_id);
  renderAll();
}

async function submit(kind: "action" | "chat" | "answer", text: string): Promise<void> {
  if (state.descriptor === null || text.trim() === "") return;
  try {
    await state.client.postInput(state.descriptor.session_id, kind, text);
  } catch (err) {
    const banner = el<HTMLDivElement>("status");
    banner.textContent = String(err);
    banner.dataset.status = "error";
    return;
  }
  await refreshDescriptor();
}

async function createSession(): Promise<void> {
  const taskRef = el<HTMLInputElement>("task-ref").value || "IG:0";
  const humanRole = el<HTMLInputElement>("human-role").value || "solo";
  state.stream?.close();
  state.events = [];
  state.descriptor = await state.client.createSession({
    task_ref: taskRef,
    human_roles: [humanRole],
  });
  state.stream = subscribeEvents(
    state.client.baseUrl,
    state.descriptor.session_id,
    0,
    (event) => {
      state.events.push(event);
      const item = toFeedItem(event);
      if (item !== null) renderFeed();
      renderAskInbox();
    },
    () => void refreshDescriptor(),
  );
  renderAll();
}

export function wirePlayground(): void {
  el<HTMLButtonElement>("create").addEventListener("click", () => void createSession());
  el<HTMLButtonElement>("send").addEventListener("click", () => {
    const input = el<HTMLInputElement>("action-text");
    void submit("action", input.value);
    input.value = "";
  });
  el<HTMLButtonElement>("send-chat").addEventListener("click", () => {
    const input = el<HTMLInputElement>("chat-text");
    void submit("chat", composeActionText("chat", [input.value]));
    input.value = "";
  });
  el<HTMLInputElement>("action-text").addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      const input = el<HTMLInputElement>("action-text");
      void submit("action", input.value);
      input.value = "";
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("create") !== null) {
  wirePlayground();
}
