// HTML fragment builders for the panels. Pure string output so the
// rendering contract is testable without a browser; app.ts injects the
// results into the page.

import type { CostResponse, TransitionResponse } from "./types.js";
import { dominantThetaTerm } from "./knobs.js";

const METRIC_LABELS: [keyof CostResponse["cost"], string][] = [
  ["zero_point_read", "zero-result point read"],
  ["point_read", "point read"],
  ["short_range", "short range"],
  ["long_range", "long range"],
  ["update", "update"],
  ["memory_footprint", "memory (bits)"],
];

function fmt(v: number): string {
  if (v === 0) return "0";
  if (Math.abs(v) >= 1000) return v.toLocaleString("en-US", { maximumFractionDigits: 0 });
  return v.toPrecision(4);
}

export function costReadoutHtml(payload: CostResponse): string {
  const dominant = dominantThetaTerm(payload);
  const rows = METRIC_LABELS.map(([key, label]) => {
    const hot = dominant === key ? ' class="dominant"' : "";
    return `<tr${hot}><td>${label}</td><td class="num">${fmt(payload.cost[key])}</td></tr>`;
  }).join("");
  const theta = payload.theta !== undefined
    ? `<p class="theta">θ = <strong>${fmt(payload.theta)}</strong> I/Os per operation` +
      (dominant ? ` — dominated by <strong>${dominant}</strong>` : "") + "</p>"
    : "";
  const d = payload.derived;
  const shape = `<p class="shape">L = ${d.levels}, cold levels = ${d.cold_levels}` +
    (d.hash_table_levels.length ? `, hash-table levels: ${d.hash_table_levels.join(", ")}` : "") +
    "</p>";
  return `<table class="cost">${rows}</table>${theta}${shape}`;
}

export function errorHtml(message: string): string {
  const safe = message.replace(/&/g, "&amp;").replace(/</g, "&lt;");
  return `<p class="error">${safe}</p>`;
}

export function transitionHtml(payload: TransitionResponse): string {
  const c = payload.costs;
  return [
    `<p>chosen strategy: <strong>${payload.strategy}</strong></p>`,
    `<table class="cost">`,
    `<tr><td>sort merge</td><td class="num">${fmt(c.sort_merge)}</td></tr>`,
    `<tr><td>batch insert</td><td class="num">${fmt(c.batch_insert)}</td></tr>`,
    `<tr><td>threshold ratio</td><td class="num">${c.threshold_ratio.toPrecision(4)}</td></tr>`,
    `</table>`,
  ].join("");
}
