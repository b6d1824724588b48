import type {
  ApiError,
  CostResponse,
  DesignKnobs,
  Environment,
  GridResponse,
  SgdResponse,
  TransitionResponse,
  WorkloadMix,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(public status: number, public detail: ApiError) {
    super(detail.message);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetcher: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetcher(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiRequestError(resp.status, payload as ApiError);
    }
    return payload as T;
  }

  async presets(): Promise<string[]> {
    const resp = await this.fetcher(`${this.base}/api/presets`);
    const payload = (await resp.json()) as { presets: string[] };
    return payload.presets;
  }

  cost(env: Environment, knobs: DesignKnobs | null, preset: string | null,
       mix?: WorkloadMix): Promise<CostResponse> {
    const body: Record<string, unknown> = { env };
    if (preset !== null) body.preset = preset;
    else body.knobs = knobs;
    if (mix) body.mix = mix;
    return this.post<CostResponse>("/api/cost", body);
  }

  grid(env: Environment, spec: Record<string, unknown>, resolution: number):
      Promise<GridResponse> {
    return this.post<GridResponse>("/api/grid", { env, spec, resolution });
  }

  sgd(env: Environment, spec: Record<string, unknown>,
      start: { cache_bits: number; buffer_bits: number; bloom_bits: number },
      stepBits: number): Promise<SgdResponse> {
    return this.post<SgdResponse>("/api/sgd", { env, spec, start, step_bits: stepBits });
  }

  transition(state: Record<string, unknown>): Promise<TransitionResponse> {
    return this.post<TransitionResponse>("/api/transition", { state });
  }
}
