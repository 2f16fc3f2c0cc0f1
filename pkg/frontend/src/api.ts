/** Typed client over an injectable transport.
 *
 * Every call goes through a single `Transport` function, so tests (and the
 * session replay feature) can intercept the full request/response stream.
 * Each request carries a monotonically increasing sequence number; callers
 * use it to discard responses superseded by newer input.
 */

import type {
  AllocateRequest,
  AllocateSingleResponse,
  AllocateSweepResponse,
  ApiErrorBody,
  DatasetSummary,
  ForecastRequest,
  ForecastResponse,
  ModelSummary,
} from "./types";

export interface ApiRequest {
  seq: number;
  method: "GET" | "POST";
  path: string;
  /** JSON body, or a raw string for CSV uploads. */
  body?: unknown;
}

export interface ApiResponse {
  status: number;
  body: unknown;
}

export type Transport = (req: ApiRequest) => Promise<ApiResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly payload: ApiErrorBody,
  ) {
    super(payload.message);
    this.name = payload.code || "ApiError";
  }
}

/** Default transport backed by fetch. */
export function fetchTransport(baseUrl = ""): Transport {
  return async (req) => {
    const init: RequestInit = { method: req.method };
    if (req.body !== undefined) {
      if (typeof req.body === "string") {
        init.body = req.body;
        init.headers = { "content-type": "text/csv" };
      } else {
        init.body = JSON.stringify(req.body);
        init.headers = { "content-type": "application/json" };
      }
    }
    const res = await fetch(baseUrl + req.path, init);
    return { status: res.status, body: await res.json() };
  };
}

export interface Tagged<T> {
  seq: number;
  body: T;
}

export class ApiClient {
  private seq = 0;

  /** Record of every request issued, in order — the replay log. */
  readonly log: ApiRequest[] = [];

  constructor(private readonly transport: Transport) {}

  private async call<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<Tagged<T>> {
    const req: ApiRequest = { seq: ++this.seq, method, path, body };
    this.log.push(req);
    const res = await this.transport(req);
    if (res.status >= 400) {
      throw new ApiError(res.status, res.body as ApiErrorBody);
    }
    return { seq: req.seq, body: res.body as T };
  }

  uploadDataset(csv: string): Promise<Tagged<DatasetSummary>> {
    return this.call("POST", "/datasets", csv);
  }

  createModel(job: Record<string, unknown>): Promise<Tagged<{ model_id: string; status: string }>> {
    return this.call("POST", "/models", job);
  }

  getModel(modelId: string): Promise<Tagged<ModelSummary>> {
    return this.call("GET", `/models/${modelId}`);
  }

  forecast(modelId: string, body: ForecastRequest): Promise<Tagged<ForecastResponse>> {
    return this.call("POST", `/models/${modelId}/forecast`, body);
  }

  allocateSweep(modelId: string, body: AllocateRequest): Promise<Tagged<AllocateSweepResponse>> {
    return this.call("POST", `/models/${modelId}/allocate`, body);
  }

  allocateSingle(modelId: string, body: AllocateRequest): Promise<Tagged<AllocateSingleResponse>> {
    return this.call("POST", `/models/${modelId}/allocate`, body);
  }

  diagnostics(modelId: string): Promise<Tagged<Record<string, unknown>>> {
    return this.call("GET", `/models/${modelId}/diagnostics`);
  }
}
