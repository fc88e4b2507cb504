/**
 * Thin typed client for the behavior-tree service. Paths and payloads
 * follow the committed HTTP contract (api-contract.json); every fact the
 * console displays originates from one of these responses.
 */

export interface Finding {
  severity: "error" | "warning";
  code: string;
  node_path: number;
  message: string;
}

export interface ValidationReport {
  ok: boolean;
  findings: Finding[];
}

export interface TraceEvent {
  tick_index: number;
  preorder_path: number;
  node: string;
  status: "success" | "failure" | "running";
}

export interface Trace {
  events: TraceEvent[];
  final: string;
  ticks_used: number;
}

export interface SessionSnapshot {
  session_id: string;
  library: string[];
  tree_xml: string | null;
  node_count: number;
  final: string | null;
  ticks_used: number;
}

export interface CommandResult {
  tree_xml: string;
  report: ValidationReport;
  attempts: number;
  node_count: number;
}

export interface StepResult {
  status: "success" | "failure" | "running";
  new_events: TraceEvent[];
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    let doc: any = null;
    try {
      doc = await resp.json();
    } catch {
      doc = null;
    }
    if (!resp.ok) {
      const code = doc?.code ?? "UnknownError";
      const message = doc?.message ?? `HTTP ${resp.status}`;
      throw new ServiceError(resp.status, code, message);
    }
    return doc as T;
  }

  createSession(library: unknown, world?: unknown): Promise<{ session_id: string }> {
    const payload: Record<string, unknown> = { library };
    if (world !== undefined) {
      payload.world = world;
    }
    return this.request("POST", "/sessions", payload);
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  sendCommand(sessionId: string, text: string): Promise<CommandResult> {
    return this.request("POST", `/sessions/${sessionId}/command`, { text });
  }

  step(sessionId: string): Promise<StepResult> {
    return this.request("POST", `/sessions/${sessionId}/step`);
  }

  run(sessionId: string, maxTicks = 100): Promise<Trace> {
    return this.request("POST", `/sessions/${sessionId}/run`, { max_ticks: maxTicks });
  }

  validate(sessionId: string, treeXml: string): Promise<ValidationReport> {
    return this.request("POST", `/sessions/${sessionId}/validate`, { tree_xml: treeXml });
  }
}
