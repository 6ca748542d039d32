import type { BatchView, Report, SessionConfig } from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseOrThrow<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class AnnotationApi {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  createSession(config: SessionConfig): Promise<BatchView> {
    return this.post("/sessions", config);
  }

  getBatch(sessionId: string): Promise<BatchView> {
    return this.get(`/sessions/${sessionId}/batch`);
  }

  submitLabels(sessionId: string, labels: Record<string, string>): Promise<BatchView> {
    return this.post(`/sessions/${sessionId}/labels`, { labels });
  }

  getReport(sessionId: string): Promise<Report> {
    return this.get(`/sessions/${sessionId}/report`);
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    return parseOrThrow<T>(resp);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parseOrThrow<T>(resp);
  }
}
