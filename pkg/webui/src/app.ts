// Page wiring: sliders and selects feed the API client (debounced, with
// stale responses discarded); every rendered number comes from a server
// payload.

import { ApiClient, ApiRequestError } from "./api.js";
import { dominantThetaTerm, knobViolations, normalizedMix } from "./knobs.js";
import { costReadoutHtml, errorHtml, transitionHtml } from "./render.js";
import { debounce, SequenceGate } from "./sequence.js";
import { buildSimplexView, simplexSvg } from "./ternary.js";
import type { DesignKnobs, Environment, GridResponse, SgdResponse } from "./types.js";

const api = new ApiClient("");

function num(id: string): number {
  return Number((document.getElementById(id) as HTMLInputElement).value);
}

function el(id: string): HTMLElement {
  return document.getElementById(id) as HTMLElement;
}

function readEnv(): Environment {
  return {
    n_entries: num("env-n"),
    entry_bits: num("env-e"),
    entries_per_page: num("env-b"),
    key_bits: num("env-f"),
    total_memory_bits: num("env-m"),
    page_bytes: (num("env-b") * num("env-e")) / 8,
  };
}

function readKnobs(): DesignKnobs {
  return {
    growth_factor: num("knob-t"),
    hot_merge_threshold: num("knob-k"),
    cold_merge_threshold: num("knob-z"),
    node_size_pages: num("knob-d"),
    fence_filter_memory_bits: num("knob-mf"),
    buffer_memory_bits: num("knob-mb"),
  };
}

// ---------------------------------------------------------------- cost panel

const costGate = new SequenceGate();

async function refreshCost(): Promise<void> {
  const env = readEnv();
  const presetSel = (document.getElementById("preset") as HTMLSelectElement).value;
  const usePreset = presetSel !== "custom";
  const knobs = readKnobs();
  if (!usePreset) {
    const problems = knobViolations(env, knobs);
    if (problems.length) {
      el("cost-panel").innerHTML = errorHtml(problems.join("; "));
      return;
    }
  }
  const mix = normalizedMix({
    zero_point_frac: num("mix-r"),
    point_frac: num("mix-v"),
    short_range_frac: num("mix-q"),
    long_range_frac: num("mix-c"),
    update_frac: num("mix-w"),
  });
  const ticket = costGate.next();
  try {
    const payload = await api.cost(env, usePreset ? null : knobs,
                                   usePreset ? presetSel : null, mix);
    if (!costGate.accept(ticket)) return;
    el("cost-panel").innerHTML = costReadoutHtml(payload);
    const knobElems: [string, number][] = [
      ["knob-t", payload.knobs.growth_factor],
      ["knob-k", payload.knobs.hot_merge_threshold],
      ["knob-z", payload.knobs.cold_merge_threshold],
      ["knob-d", payload.knobs.node_size_pages],
      ["knob-mf", payload.knobs.fence_filter_memory_bits],
      ["knob-mb", payload.knobs.buffer_memory_bits],
    ];
    if (usePreset) {
      for (const [id, value] of knobElems) {
        (document.getElementById(id) as HTMLInputElement).value = String(value);
      }
    }
  } catch (exc) {
    if (!costGate.accept(ticket)) return;
    const message = exc instanceof ApiRequestError ? exc.detail.message : String(exc);
    el("cost-panel").innerHTML = errorHtml(message);
  }
}

// ------------------------------------------------------------- simplex panel

const gridGate = new SequenceGate();
let lastGrid: GridResponse | null = null;
let lastSgd: SgdResponse | null = null;

function readSpec(): Record<string, unknown> {
  return {
    kind: (document.getElementById("wl-kind") as HTMLSelectElement).value,
    op_count: num("wl-ops"),
    key_space: num("wl-keys"),
    write_prob: num("wl-w"),
    zipf_s: num("wl-s"),
    seed: num("wl-seed"),
  };
}

async function refreshGrid(): Promise<void> {
  const ticket = gridGate.next();
  el("simplex-status").textContent = "sweeping…";
  try {
    const grid = await api.grid(readEnv(), readSpec(), num("grid-res"));
    if (!gridGate.accept(ticket)) return;
    lastGrid = grid;
    renderSimplex();
    el("simplex-status").textContent =
      `${grid.rows.length} cells; actual minimum ${minIo(grid)} I/Os`;
  } catch (exc) {
    if (!gridGate.accept(ticket)) return;
    const message = exc instanceof ApiRequestError ? exc.detail.message : String(exc);
    el("simplex-status").textContent = "";
    el("simplex-panel").innerHTML = errorHtml(message) +
      '<button onclick="location.reload()">rerun</button>';
  }
}

function minIo(grid: GridResponse): number {
  return Math.min(...grid.rows.map((r) => r.total_io));
}

async function runSgd(): Promise<void> {
  if (!lastGrid) return;
  const env = readEnv();
  const total = env.total_memory_bits;
  const start = {
    cache_bits: Math.floor(total / 3),
    buffer_bits: Math.floor(total / 3),
    bloom_bits: total - 2 * Math.floor(total / 3),
  };
  el("simplex-status").textContent = "descending…";
  lastSgd = await api.sgd(env, readSpec(), start, Math.floor(total / (num("grid-res") - 1)));
  renderSimplex();
  el("simplex-status").textContent =
    `predicted minimum at cache=${lastSgd.predicted_min.cache_bits}, ` +
    `buffer=${lastSgd.predicted_min.buffer_bits}, bloom=${lastSgd.predicted_min.bloom_bits}`;
}

function renderSimplex(): void {
  if (!lastGrid) return;
  const view = buildSimplexView(lastGrid, lastSgd, readEnv().total_memory_bits);
  el("simplex-panel").innerHTML = simplexSvg(view);
}

// ----------------------------------------------------------- transition panel

async function refreshTransition(): Promise<void> {
  const levels = (document.getElementById("tr-levels") as HTMLInputElement).value
    .split(",").map((s) => parseInt(s.trim(), 10)).filter((v) => !isNaN(v));
  if (!levels.length) return;
  try {
    const payload = await api.transition({
      level_entries: levels,
      entry_bytes: num("tr-entry"),
      page_bytes: num("tr-page"),
      write_read_ratio: num("tr-phi"),
    });
    el("transition-panel").innerHTML = transitionHtml(payload);
  } catch (exc) {
    const message = exc instanceof ApiRequestError ? exc.detail.message : String(exc);
    el("transition-panel").innerHTML = errorHtml(message);
  }
}

// -------------------------------------------------------------------- wiring

export function boot(): void {
  const debouncedCost = debounce(refreshCost, 200);
  for (const id of ["env-n", "env-e", "env-b", "env-f", "env-m",
                    "knob-t", "knob-k", "knob-z", "knob-d", "knob-mf", "knob-mb",
                    "mix-r", "mix-v", "mix-q", "mix-c", "mix-w"]) {
    document.getElementById(id)?.addEventListener("input", debouncedCost);
  }
  document.getElementById("preset")?.addEventListener("change", refreshCost);
  document.getElementById("grid-run")?.addEventListener("click", refreshGrid);
  document.getElementById("sgd-run")?.addEventListener("click", runSgd);
  const debouncedTransition = debounce(refreshTransition, 200);
  for (const id of ["tr-levels", "tr-entry", "tr-page", "tr-phi"]) {
    document.getElementById(id)?.addEventListener("input", debouncedTransition);
  }
  void api.presets().then((names) => {
    const select = document.getElementById("preset") as HTMLSelectElement;
    for (const name of names) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
    void refreshCost();
    void refreshTransition();
  });
}

if (typeof document !== "undefined" && document.getElementById("cost-panel")) {
  boot();
}

export { dominantThetaTerm };
