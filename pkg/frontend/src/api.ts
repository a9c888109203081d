/** Typed client for the local `acdl serve` JSON API. All language behavior
 * lives on the server; this file only moves JSON. */

export interface Span {
  start: number;
  end: number;
  line: number;
  col: number;
}

export interface Diagnostic {
  code: string;
  severity: "error" | "warning" | "info";
  message: string;
  span: Span;
  file: string;
}

export interface RenderResponse {
  svg: string;
  diagnostics: Diagnostic[];
}

export interface RenderRequest {
  source: string;
  context?: string;
  env?: unknown;
  theme?: unknown;
}

export interface Example {
  name: string;
  source: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly fetcher: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  async render(body: RenderRequest, signal?: AbortSignal): Promise<RenderResponse> {
    return this.post("/api/render", body, signal) as Promise<RenderResponse>;
  }

  async examples(): Promise<Example[]> {
    const resp = await this.fetcher(this.base + "/api/examples");
    if (!resp.ok) {
      throw new ApiError(`examples failed (${resp.status})`, resp.status);
    }
    return (await resp.json()) as Example[];
  }

  private async post(path: string, body: unknown, signal?: AbortSignal): Promise<unknown> {
    const resp = await this.fetcher(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    const payload = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      const message = typeof payload.error === "string" ? payload.error : `HTTP ${resp.status}`;
      throw new ApiError(message, resp.status);
    }
    return payload;
  }
}
