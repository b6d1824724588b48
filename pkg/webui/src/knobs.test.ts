import { describe, expect, it } from "vitest";

import { dominantThetaTerm, knobViolations, normalizedMix } from "./knobs.js";
import type { CostResponse, DesignKnobs, Environment } from "./types.js";

const env: Environment = {
  n_entries: 65536, entry_bits: 64, entries_per_page: 64,
  key_bits: 32, total_memory_bits: 2 ** 24, page_bytes: 512,
};

function knobs(overrides: Partial<DesignKnobs> = {}): DesignKnobs {
  return {
    growth_factor: 10, hot_merge_threshold: 1, cold_merge_threshold: 1,
    node_size_pages: 1, fence_filter_memory_bits: 2 ** 20,
    buffer_memory_bits: 2 ** 14, ...overrides,
  };
}

describe("client-side knob domain mirror", () => {
  it("accepts a valid vector", () => {
    expect(knobViolations(env, knobs())).toEqual([]);
  });

  it("flags K beyond T-1 without a request", () => {
    const problems = knobViolations(env, knobs({ hot_merge_threshold: 12 }));
    expect(problems.some((p) => p.includes("[1, 9]"))).toBe(true);
  });

  it("flags a buffer smaller than one node", () => {
    const problems = knobViolations(env, knobs({ buffer_memory_bits: 100 }));
    expect(problems.some((p) => p.includes("one node"))).toBe(true);
  });

  it("flags a memory budget overflow", () => {
    const problems = knobViolations(
      env, knobs({ fence_filter_memory_bits: 2 ** 24 }));
    expect(problems.some((p) => p.includes("total memory"))).toBe(true);
  });
});

describe("dominant theta term", () => {
  const base: CostResponse = {
    knobs: knobs(),
    cost: { zero_point_read: 1, point_read: 1, short_range: 1, long_range: 1,
            update: 1, memory_footprint: 1 },
    derived: { levels: 3, cold_levels: 0, no_filter_levels: 0, hash_table_levels: [] },
  };

  it("is absent without a mix", () => {
    expect(dominantThetaTerm(base)).toBeNull();
  });

  it("picks the largest server-reported term", () => {
    const payload = {
      ...base,
      theta: 1.0,
      theta_terms: { point_read: 0.3, update: 0.6, short_range: 0.1 },
    };
    expect(dominantThetaTerm(payload)).toBe("update");
  });

  it("is null when every term is zero", () => {
    const payload = { ...base, theta: 0, theta_terms: { update: 0, point_read: 0 } };
    expect(dominantThetaTerm(payload)).toBeNull();
  });
});

describe("mix normalization", () => {
  it("renormalizes slider values to sum to one", () => {
    const mix = normalizedMix({
      zero_point_frac: 1, point_frac: 1, short_range_frac: 0,
      long_range_frac: 0, update_frac: 2,
    });
    const total = mix.zero_point_frac + mix.point_frac + mix.short_range_frac +
      mix.long_range_frac + mix.update_frac;
    expect(total).toBeCloseTo(1, 12);
    expect(mix.update_frac).toBeCloseTo(0.5, 12);
  });

  it("falls back to pure point reads when everything is zero", () => {
    const mix = normalizedMix({
      zero_point_frac: 0, point_frac: 0, short_range_frac: 0,
      long_range_frac: 0, update_frac: 0,
    });
    expect(mix.point_frac).toBe(1);
  });
});
