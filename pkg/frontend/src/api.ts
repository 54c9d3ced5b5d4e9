// Typed fetch wrapper for the task service. Every non-2xx response becomes
// an ApiError carrying the server's structured error body.

import type {
  Account,
  ActivityItem,
  DashboardSummary,
  ErrorBody,
  PriorityBreakdown,
  Task,
  WorkloadRow,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly details?: Record<string, unknown>,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface TaskPatch {
  title?: string;
  description?: string;
  status?: string;
  priority?: string;
  assignee_ids?: string[];
  due_date?: string | null;
}

export interface TaskPage {
  tasks: Task[];
  total_count: number;
  offset: number;
  limit: number;
}

async function toError(resp: Response): Promise<ApiError> {
  let code = "unknown";
  let message = `request failed with ${resp.status}`;
  let details: Record<string, unknown> | undefined;
  try {
    const body = (await resp.json()) as ErrorBody;
    code = body.error.code;
    message = body.error.message;
    details = body.error.details;
  } catch {
    // non-JSON body; keep the fallback message
  }
  return new ApiError(resp.status, code, message, details);
}

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    public token: string | null = null,
  ) {}

  private headers(json = false): Record<string, string> {
    const h: Record<string, string> = {};
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    if (json) h["Content-Type"] = "application/json";
    return h;
  }

  private async request<T>(method: string, path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, { method, ...init });
    if (!resp.ok) {
      throw await toError(resp);
    }
    return (await resp.json()) as T;
  }

  private get<T>(path: string): Promise<T> {
    return this.request<T>("GET", path, { headers: this.headers() });
  }

  private send<T>(method: string, path: string, body?: unknown, revision?: number): Promise<T> {
    const headers = this.headers(body !== undefined);
    if (revision !== undefined) headers["If-Match"] = String(revision);
    return this.request<T>(method, path, {
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  async login(email: string, password: string): Promise<{ token: string; account: Account }> {
    return this.send("POST", "/api/auth/login", { email, password });
  }

  me(): Promise<Account> {
    return this.get("/api/me");
  }

  health(): Promise<{ status: string; last_event_seq: number }> {
    return this.get("/api/health");
  }

  listTasks(limit = 500): Promise<TaskPage> {
    return this.get(`/api/tasks?limit=${limit}`);
  }

  getTask(id: string): Promise<Task> {
    return this.get(`/api/tasks/${id}`);
  }

  createTask(fields: TaskPatch & { title: string }): Promise<Task> {
    return this.send("POST", "/api/tasks", fields);
  }

  patchTask(id: string, fields: TaskPatch, revision: number): Promise<Task> {
    return this.send("PATCH", `/api/tasks/${id}`, fields, revision);
  }

  trashTask(id: string): Promise<Task> {
    return this.send("DELETE", `/api/tasks/${id}`);
  }

  listTrash(): Promise<{ tasks: Task[]; total_count: number }> {
    return this.get("/api/trash");
  }

  restoreTask(id: string): Promise<Task> {
    return this.send("POST", `/api/trash/${id}/restore`);
  }

  purgeTask(id: string): Promise<{ ok: boolean; id: string }> {
    return this.send("DELETE", `/api/trash/${id}`);
  }

  dashboardSummary(): Promise<DashboardSummary> {
    return this.get("/api/dashboard/summary");
  }

  dashboardWorkload(): Promise<{ rows: WorkloadRow[] }> {
    return this.get("/api/dashboard/workload");
  }

  dashboardPriority(): Promise<PriorityBreakdown> {
    return this.get("/api/dashboard/priority");
  }

  dashboardActivity(n = 20): Promise<{ items: ActivityItem[] }> {
    return this.get(`/api/dashboard/activity?n=${n}`);
  }

  listTeam(): Promise<{ users: Account[]; total_count: number }> {
    return this.get("/api/team");
  }

  createAccount(fields: {
    name: string;
    email: string;
    password: string;
    role: string;
  }): Promise<Account> {
    return this.send("POST", "/api/team", fields);
  }

  patchAccount(id: string, fields: { role?: string; active?: boolean }): Promise<Account> {
    return this.send("PATCH", `/api/team/${id}`, fields);
  }

  async uploadAsset(taskId: string, file: File): Promise<{ task: Task }> {
    const form = new FormData();
    form.append("file", file);
    const resp = await fetch(`${this.baseUrl}/api/tasks/${taskId}/assets`, {
      method: "POST",
      headers: this.headers(),
      body: form,
    });
    if (!resp.ok) throw await toError(resp);
    return (await resp.json()) as { task: Task };
  }

  assetUrl(assetId: string): string {
    return `${this.baseUrl}/api/assets/${assetId}`;
  }
}
