// Client-side mirror of the knob domains: catches out-of-range slider
// states before they hit the network (the server remains authoritative).

import type { CostResponse, DesignKnobs, Environment, WorkloadMix } from "./types.js";

export function knobViolations(env: Environment, knobs: DesignKnobs): string[] {
  const problems: string[] = [];
  const t = knobs.growth_factor;
  const nodeBits = knobs.node_size_pages * env.entries_per_page * env.entry_bits;
  if (t < 2) problems.push("growth_factor must be at least 2");
  if (knobs.buffer_memory_bits < nodeBits) {
    problems.push(`buffer must hold one node (${nodeBits} bits)`);
  } else {
    const tMax = (env.n_entries * env.entry_bits) / knobs.buffer_memory_bits;
    if (t > tMax) problems.push(`growth_factor above maximum ${Math.floor(tMax)}`);
  }
  if (knobs.hot_merge_threshold < 1 || knobs.hot_merge_threshold > t - 1) {
    problems.push(`hot_merge_threshold outside [1, ${t - 1}]`);
  }
  if (knobs.cold_merge_threshold < 1 || knobs.cold_merge_threshold > t - 1) {
    problems.push(`cold_merge_threshold outside [1, ${t - 1}]`);
  }
  if (knobs.node_size_pages < 1) problems.push("node_size_pages must be at least 1");
  if (knobs.fence_filter_memory_bits + knobs.buffer_memory_bits > env.total_memory_bits) {
    problems.push("fence/filter + buffer budgets exceed total memory");
  }
  return problems;
}

/** The largest additive term of theta, straight from the server payload. */
export function dominantThetaTerm(payload: CostResponse): string | null {
  const terms = payload.theta_terms;
  if (!terms) return null;
  let best: string | null = null;
  let bestValue = -Infinity;
  for (const [name, value] of Object.entries(terms)) {
    if (value > bestValue) {
      best = name;
      bestValue = value;
    }
  }
  return bestValue > 0 ? best : null;
}

export function normalizedMix(raw: Record<keyof WorkloadMix, number>): WorkloadMix {
  const total =
    raw.zero_point_frac + raw.point_frac + raw.short_range_frac +
    raw.long_range_frac + raw.update_frac;
  if (total <= 0) {
    return { zero_point_frac: 0, point_frac: 1, short_range_frac: 0,
             long_range_frac: 0, update_frac: 0 };
  }
  return {
    zero_point_frac: raw.zero_point_frac / total,
    point_frac: raw.point_frac / total,
    short_range_frac: raw.short_range_frac / total,
    long_range_frac: raw.long_range_frac / total,
    update_frac: raw.update_frac / total,
  };
}
