import { describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError } from "./api.js";
import { costReadoutHtml, errorHtml, transitionHtml } from "./render.js";
import type { CostResponse } from "./types.js";

function fakeFetch(status: number, payload: unknown,
                   log: { url: string; body?: unknown }[]) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    log.push({ url, body: init?.body ? JSON.parse(init.body as string) : undefined });
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => payload,
    } as Response;
  };
}

const costPayload: CostResponse = {
  knobs: {
    growth_factor: 10, hot_merge_threshold: 1, cold_merge_threshold: 1,
    node_size_pages: 1, fence_filter_memory_bits: 672000, buffer_memory_bits: 4096,
  },
  cost: { zero_point_read: 0.0117, point_read: 1.0012, short_range: 4,
          long_range: 5.024, update: 0.3125, memory_footprint: 676096 },
  derived: { levels: 4, cold_levels: 0, no_filter_levels: 0, hash_table_levels: [] },
  theta: 0.657,
  theta_terms: { point_read: 0.5006, update: 0.1563 },
};

describe("api client", () => {
  it("posts the exact request schema for /api/cost", async () => {
    const log: { url: string; body?: unknown }[] = [];
    const client = new ApiClient("", fakeFetch(200, costPayload, log));
    const env = costEnv();
    await client.cost(env, null, "leveled_lsm",
                      { zero_point_frac: 0, point_frac: 0.5, short_range_frac: 0,
                        long_range_frac: 0, update_frac: 0.5 });
    expect(log[0].url).toBe("/api/cost");
    expect(log[0].body).toMatchObject({ env, preset: "leveled_lsm" });
  });

  it("surfaces server validation errors with their message", async () => {
    const log: { url: string }[] = [];
    const client = new ApiClient("", fakeFetch(400, {
      code: "invalid_request",
      message: "hot_merge_threshold K=9 outside [1, T-1]=[1, 3]",
    }, log));
    await expect(client.transition({})).rejects.toThrowError(ApiRequestError);
  });
});

describe("panel rendering is a pure function of the payload", () => {
  it("shows every cost metric and flags the dominant term", () => {
    const html = costReadoutHtml(costPayload);
    expect(html).toContain("1.001");       // point read
    expect(html).toContain("0.3125");      // update
    expect(html).toContain("dominated by <strong>point_read</strong>");
    expect((html.match(/class="dominant"/g) ?? []).length).toBe(1);
  });

  it("renders identical html for identical payloads", () => {
    expect(costReadoutHtml(costPayload)).toBe(costReadoutHtml({ ...costPayload }));
  });

  it("escapes error messages", () => {
    expect(errorHtml("<script>alert(1)</script>"))
      .toBe('<p class="error">&lt;script>alert(1)&lt;/script></p>');
  });

  it("renders the transition planner payload", () => {
    const html = transitionHtml({
      costs: { sort_merge: 350, batch_insert: 3474.1875, lazy_bound: 350,
               preemptive: 350, threshold_ratio: 0.005235602 },
      strategy: "sort_merge",
    });
    expect(html).toContain("sort_merge");
    expect(html).toContain("350");
    expect(html).toContain("0.005236");
  });
});

function costEnv() {
  return {
    n_entries: 65536, entry_bits: 64, entries_per_page: 64,
    key_bits: 32, total_memory_bits: 2 ** 24, page_bytes: 512,
  };
}
