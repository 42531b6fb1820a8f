/** Typed client for the hallucination service.
 *
 * Every request that carries attributes validates them in [0, 1] before
 * anything goes on the wire; the service would reject them too, but the UI
 * must not emit an invalid vector in the first place.
 */

import type {
  ClassifyResponse,
  HallucinateRequest,
  HallucinateResponse,
  HealthResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
  }
}

export function assertUnitInterval(values: number[]): void {
  for (const v of values) {
    if (!Number.isFinite(v) || v < 0 || v > 1) {
      throw new RangeError(`attribute value ${v} outside [0, 1]`);
    }
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn: FetchLike = (...args) => fetch(...args)) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError("network_error", `service unreachable: ${String(err)}`, 0);
    }
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} ${response.statusText}`;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        if (body.code) code = body.code;
        if (body.message) message = body.message;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(code, message, response.status);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/health");
  }

  attributes(): Promise<string[]> {
    return this.request<string[]>("/attributes");
  }

  classify(lrImage: string): Promise<ClassifyResponse> {
    return this.post<ClassifyResponse>("/classify", { lr_image: lrImage });
  }

  async hallucinate(req: HallucinateRequest): Promise<HallucinateResponse> {
    if (req.attributes != null) {
      assertUnitInterval(req.attributes);
    }
    return this.post<HallucinateResponse>("/hallucinate", req);
  }
}
