/* HTTP client for the grading service.
 *
 * Every call carries the deployment bearer token. Errors map to typed
 * exceptions so the caller can branch on what actually happened: a 429
 * carries the wait in milliseconds, a 502 still carries the recorded
 * attempt (the service logs provider failures before answering).
 */

import type {
  AttemptResult,
  HistoryEntry,
  TaskDetail,
  TaskSummary,
} from "./types.js";

export interface ClientConfig {
  baseUrl: string;
  token: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export class RateLimited extends ApiError {
  constructor(
    detail: string,
    readonly retryAfterMs: number,
  ) {
    super(429, detail);
    this.name = "RateLimited";
  }
}

export class ProviderUnavailable extends ApiError {
  constructor(
    detail: string,
    readonly attempt: AttemptResult,
  ) {
    super(502, detail);
    this.name = "ProviderUnavailable";
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // non-JSON error body; fall through to the status line
  }
  return `request failed with status ${response.status}`;
}

export class Client {
  private readonly base: string;
  private readonly token: string;

  constructor(config: ClientConfig) {
    this.base = config.baseUrl.replace(/\/+$/, "");
    this.token = config.token;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path, {
      headers: { Authorization: `Bearer ${this.token}` },
    });
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  listTasks(filter?: { lab?: number; kind?: string }): Promise<TaskSummary[]> {
    const query = new URLSearchParams();
    if (filter?.lab !== undefined) query.set("lab", String(filter.lab));
    if (filter?.kind !== undefined) query.set("kind", filter.kind);
    const suffix = query.size > 0 ? `?${query}` : "";
    return this.get<TaskSummary[]>(`/tasks${suffix}`);
  }

  getTask(taskId: string): Promise<TaskDetail> {
    return this.get<TaskDetail>(`/tasks/${encodeURIComponent(taskId)}`);
  }

  history(studentId: string, taskId: string): Promise<HistoryEntry[]> {
    const student = encodeURIComponent(studentId);
    const task = encodeURIComponent(taskId);
    return this.get<HistoryEntry[]>(`/students/${student}/tasks/${task}/attempts`);
  }

  async submit(
    studentId: string,
    taskId: string,
    prompt: string,
  ): Promise<AttemptResult> {
    const response = await fetch(this.base + "/attempts", {
      method: "POST",
      headers: {
        Authorization: `Bearer ${this.token}`,
        "Content-Type": "application/json",
      },
      body: JSON.stringify({
        student_id: studentId,
        task_id: taskId,
        prompt,
      }),
    });
    if (response.status === 429) {
      const body = await response.json();
      const wait = typeof body.retry_after_ms === "number" ? body.retry_after_ms : 1000;
      throw new RateLimited(body.detail ?? "rate limit exceeded", wait);
    }
    if (response.status === 502) {
      const body = (await response.json()) as AttemptResult;
      throw new ProviderUnavailable(
        body.detail ?? "provider unavailable",
        body,
      );
    }
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as AttemptResult;
  }
}
