// Thin typed client for the runtime HTTP API. The fetch implementation is
// injectable so tests can replay recorded responses.

import type {
  ComponentJson,
  DiagnosticJson,
  PlanJson,
  PlanNodeJson,
  SymbolJson,
  TrialReportJson,
} from "./types.js";

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

export class ApiClient {
  constructor(private baseUrl: string, private fetchFn: FetchLike) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: Parameters<FetchLike>[1] = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const data = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, (data as { detail?: unknown }).detail ?? data);
    }
    return data as T;
  }

  async components(): Promise<ComponentJson[]> {
    const data = await this.request<{ components: ComponentJson[] }>("GET", "/components");
    return data.components;
  }

  async symbols(): Promise<SymbolJson[]> {
    const data = await this.request<{ symbols: SymbolJson[] }>("GET", "/symbols");
    return data.symbols;
  }

  async scenes(): Promise<string[]> {
    const data = await this.request<{ scenes: string[] }>("GET", "/scenes");
    return data.scenes;
  }

  async plan(id: string): Promise<PlanJson> {
    return this.request<PlanJson>("GET", `/plan/${id}`);
  }

  async savePlanTree(name: string, tree: PlanNodeJson): Promise<{ id: string; name: string }> {
    return this.request("POST", "/plan", { name, tree });
  }

  async validatePlan(id: string): Promise<DiagnosticJson[]> {
    const data = await this.request<{ diagnostics: DiagnosticJson[] }>(
      "POST", `/plan/${id}/validate`);
    return data.diagnostics;
  }

  async runPlan(id: string, scene: string, seed = 0): Promise<TrialReportJson> {
    return this.request("POST", `/plan/${id}/run`, { scene, seed });
  }

  async invokeOperation(component: string, operation: string,
                        params: Record<string, unknown> = {}): Promise<{
    status: string; error: string | null; result: unknown;
  }> {
    return this.request("POST", `/components/${component}/ops/${operation}`, params);
  }

  async calibrate(stations = 11, seed = 0): Promise<{ camera: number[]; residual: number }> {
    return this.request("POST", "/calibrate", { stations, seed });
  }
}
