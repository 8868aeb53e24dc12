// Typed client for the recommendation service. The UI is a pure client:
// it works against any server that speaks these endpoints, including the
// recorded-response stub used in tests.

import type {
  ApiErrorBody,
  JournalInfo,
  ModelInfo,
  RecommendRequest,
  RecommendResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly name: string,
    public readonly detail: string,
  ) {
    super(`${name}: ${detail}`);
  }
}

async function parseError(res: Response): Promise<never> {
  let body: ApiErrorBody | null = null;
  try {
    body = (await res.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; fall through
  }
  throw new ApiError(res.status, body?.error ?? "HttpError",
    body?.detail ?? res.statusText);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async recommend(req: RecommendRequest, signal?: AbortSignal): Promise<RecommendResponse> {
    const res = await fetch(this.url("/api/recommend"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
      signal,
    });
    if (!res.ok) await parseError(res);
    return (await res.json()) as RecommendResponse;
  }

  async journals(): Promise<JournalInfo[]> {
    const res = await fetch(this.url("/api/journals"));
    if (!res.ok) await parseError(res);
    return (await res.json()) as JournalInfo[];
  }

  async modelInfo(): Promise<ModelInfo> {
    const res = await fetch(this.url("/api/model"));
    if (!res.ok) await parseError(res);
    return (await res.json()) as ModelInfo;
  }

  async health(): Promise<boolean> {
    try {
      const res = await fetch(this.url("/healthz"));
      return res.ok;
    } catch {
      return false;
    }
  }
}
