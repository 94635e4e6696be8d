import type {
  ApiErrorBody,
  ItemPage,
  JudgmentAck,
  SeenResponse,
  SessionInfo,
  TaskView,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: Record<string, unknown>,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let body: ApiErrorBody = { code: "http_error", message: response.statusText, details: {} };
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      /* non-JSON error body: keep the status text */
    }
    throw new ApiError(response.status, body.code, body.message, body.details ?? {});
  }
  return (await response.json()) as T;
}

export class AnnotationApi {
  constructor(readonly base: string = "") {}

  createSession(raterId: string): Promise<SessionInfo> {
    return request<SessionInfo>(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ rater_id: raterId }),
    });
  }

  listItems(offset: number, limit: number): Promise<ItemPage> {
    return request<ItemPage>(this.base, `/items?offset=${offset}&limit=${limit}`);
  }

  submitSeen(sessionId: string, itemIds: string[]): Promise<SeenResponse> {
    return request<SeenResponse>(this.base, `/sessions/${sessionId}/seen`, {
      method: "POST",
      body: JSON.stringify({ item_ids: itemIds }),
    });
  }

  fetchTask(sessionId: string): Promise<TaskView> {
    return request<TaskView>(this.base, `/sessions/${sessionId}/task`);
  }

  submitJudgment(
    sessionId: string,
    payload: { task_id: string; less: string[]; same: string[]; more: string[] },
  ): Promise<JudgmentAck> {
    return request<JudgmentAck>(this.base, `/sessions/${sessionId}/judgments`, {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }
}
