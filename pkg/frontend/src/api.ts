/** Typed client for the langworld session service (v1). */

export interface ActionSpec {
  name: string;
  arity: number;
  level: string;
  description: string;
}

export interface ActionPalette {
  space_id: string;
  naming: string;
  observation_style: string;
  actions: ActionSpec[];
}

export interface RoleInfo {
  agent_id: string;
  role: string;
  human: boolean;
  action_space: string;
}

export interface SessionDescriptor {
  session_id: string;
  status: "awaiting_human" | "agent_turn" | "finished";
  pending_prompt: string | null;
  task_type: string;
  instruction: string;
  roles: RoleInfo[];
  waiting_human: string | null;
  pending_ask: string | null;
  action_palettes: Record<string, ActionPalette>;
  events_cursor: number;
  error: string | null;
}

export interface TranscriptEvent {
  index: number;
  step: number;
  agent: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface EpisodeScore {
  success: boolean;
  goal_sr: number;
  steps: number;
  llm_calls: number;
  misplaced_pct: number | null;
  fixed_strict_pct: number | null;
  answer_correct: boolean | null;
  question_type: string | null;
  expert_len: number | null;
}

export interface FinalReport {
  outcome: string;
  failure_reason: string | null;
  score: EpisodeScore | null;
}

export interface InputResult {
  status: string;
  feedback: string | null;
  next_observation: string | null;
  events_cursor: number;
  final_report?: FinalReport;
  error?: string;
}

export interface EpisodeDocument {
  schema: string;
  episode_id: string;
  task_ref: string;
  seed: number;
  strategy: string;
  outcome: string;
  failure_reason: string | null;
  score: EpisodeScore | null;
  events: TranscriptEvent[];
}

export interface CreateSessionRequest {
  task_ref?: string;
  task?: unknown;
  human_roles: string[];
  strategy?: string;
  backend?: Record<string, unknown>;
  seed?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public kind: string,
    detail: string,
  ) {
    super(`${kind}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let kind = "HttpError";
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    kind = body.error ?? kind;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(response.status, kind, detail);
}

export class GatewayClient {
  constructor(public baseUrl: string) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  createSession(request: CreateSessionRequest): Promise<SessionDescriptor> {
    return this.post("/sessions", request);
  }

  describeSession(sessionId: string): Promise<SessionDescriptor> {
    return this.get(`/sessions/${sessionId}`);
  }

  postInput(
    sessionId: string,
    kind: "action" | "chat" | "answer",
    text: string,
  ): Promise<InputResult> {
    return this.post(`/sessions/${sessionId}/input`, { kind, text });
  }

  episode(sessionId: string): Promise<EpisodeDocument> {
    return this.get(`/episodes/${sessionId}`);
  }
}
