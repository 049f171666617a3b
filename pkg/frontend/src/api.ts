// Typed client for the stockflow JSON API. The UI never computes model
// numbers itself: every plotted or displayed value comes out of these
// responses untouched.

export interface SliderMeta {
  name: string;
  default: number;
  min: number;
  max: number;
  step: number;
}

export interface VariableMeta {
  name: string;
  kind: "stock" | "constant" | "control" | "auxiliary";
}

export interface ModelInfo {
  id: string;
  description: string;
  sliders: SliderMeta[];
  variables: VariableMeta[];
}

export interface SimulateRequest {
  model: string;
  overrides: Record<string, number>;
  seed: number;
  label?: string;
}

export interface SimulateResponse {
  time: number[];
  series: Record<string, number[]>;
  warnings: string[];
}

export interface MetricRowJson {
  label: string;
  variable: string;
  resolved: string;
  mean: number;
  min: number;
  max: number;
  final: number;
  peak_time: number;
}

export interface CompareResponse {
  window: [number, number];
  time: number[];
  series: { label: string; variable: string; resolved: string; values: number[] }[];
  metrics: MetricRowJson[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, init);
  const body = await resp.json().catch(() => null);
  if (!resp.ok) {
    throw new ApiError(resp.status, body && (body as { detail?: unknown }).detail);
  }
  return body as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  listModels(): Promise<ModelInfo[]> {
    return request(this.base, "/api/models");
  }

  simulate(req: SimulateRequest): Promise<SimulateResponse> {
    return request(this.base, "/api/simulate", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  compare(
    runs: SimulateRequest[],
    vars: string[],
    window: [number, number] | null,
  ): Promise<CompareResponse> {
    return request(this.base, "/api/compare", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ runs, vars, window }),
    });
  }
}
