// Barycentric geometry and SVG assembly for the memory-simplex heatmap.
// Axis order is fixed: cache at the apex, buffer bottom-left, bloom
// bottom-right. All functions are pure; the payload is the only source
// of numbers.

import type { GridResponse, GridRow, SgdResponse } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

const SQRT3_2 = Math.sqrt(3) / 2;
const COMPONENT_INDEX: Record<string, number> = { cache: 0, buffer: 1, bloom: 2 };

/** Map a lattice cell (cache, buffer, bloom) to unit barycentric x/y. */
export function cellToXY(cell: [number, number, number]): Point {
  const [a, b, c] = cell;
  const total = a + b + c;
  if (total === 0) return { x: 0.5, y: SQRT3_2 / 3 };
  const x = (0.5 * (2 * c + a)) / total;
  const y = (SQRT3_2 * a) / total;
  return { x, y };
}

export function arrowTarget(row: GridRow): [number, number, number] | null {
  if (row.arrow_from === "none" || row.arrow_from === row.arrow_to) return null;
  const cell: [number, number, number] = [...row.cell];
  cell[COMPONENT_INDEX[row.arrow_from]] -= 1;
  cell[COMPONENT_INDEX[row.arrow_to]] += 1;
  if (cell.some((v) => v < 0)) return null;
  return cell;
}

export function minimumRow(rows: GridRow[]): GridRow {
  return rows.reduce((best, row) => (row.total_io < best.total_io ? row : best));
}

/** Blue (low I/O) to red (high I/O), matching the contour convention. */
export function heatColor(io: number, min: number, max: number): string {
  const t = max > min ? (io - min) / (max - min) : 0;
  const r = Math.round(40 + 200 * t);
  const b = Math.round(240 - 200 * t);
  return `rgb(${r},80,${b})`;
}

export interface SimplexView {
  cells: { cell: [number, number, number]; xy: Point; io: number; color: string }[];
  arrows: { from: Point; to: Point }[];
  minimum: { cell: [number, number, number]; xy: Point; io: number };
  predicted?: { xy: Point; weight: number }[];
}

export function buildSimplexView(grid: GridResponse,
                                 sgd?: SgdResponse | null,
                                 totalBits?: number): SimplexView {
  const rows = grid.rows;
  const ios = rows.map((r) => r.total_io);
  const lo = Math.min(...ios);
  const hi = Math.max(...ios);
  const cells = rows.map((r) => ({
    cell: r.cell,
    xy: cellToXY(r.cell),
    io: r.total_io,
    color: heatColor(r.total_io, lo, hi),
  }));
  const arrows = [];
  for (const r of rows) {
    const target = arrowTarget(r);
    if (target) {
      arrows.push({ from: cellToXY(r.cell), to: cellToXY(target) });
    }
  }
  const best = minimumRow(rows);
  const view: SimplexView = {
    cells,
    arrows,
    minimum: { cell: best.cell, xy: cellToXY(best.cell), io: best.total_io },
  };
  if (sgd && totalBits) {
    const p = sgd.predicted_min;
    const scale = (grid.resolution - 1) / totalBits;
    const cell: [number, number, number] = [
      p.cache_bits * scale, p.buffer_bits * scale, p.bloom_bits * scale];
    view.predicted = [{ xy: cellToXY(cell), weight: 1 }];
  }
  return view;
}

const MARGIN = 30;
const WIDTH = 520;

function toScreen(p: Point): Point {
  return {
    x: MARGIN + p.x * (WIDTH - 2 * MARGIN),
    y: WIDTH * 0.9 - MARGIN - p.y * (WIDTH - 2 * MARGIN),
  };
}

/** Render the view as an SVG document string. */
export function simplexSvg(view: SimplexView): string {
  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${WIDTH * 0.9}">`);
  parts.push(`<defs><marker id="tip" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto">` +
    `<path d="M0,0 L6,3 L0,6 z" fill="#333"/></marker></defs>`);
  for (const c of view.cells) {
    const s = toScreen(c.xy);
    parts.push(`<circle cx="${s.x.toFixed(1)}" cy="${s.y.toFixed(1)}" r="11" ` +
      `fill="${c.color}" data-cell="${c.cell.join(",")}" data-io="${c.io}"/>`);
  }
  for (const a of view.arrows) {
    const f = toScreen(a.from);
    const t = toScreen(a.to);
    const mx = f.x + (t.x - f.x) * 0.65;
    const my = f.y + (t.y - f.y) * 0.65;
    parts.push(`<line x1="${f.x.toFixed(1)}" y1="${f.y.toFixed(1)}" ` +
      `x2="${mx.toFixed(1)}" y2="${my.toFixed(1)}" stroke="#333" ` +
      `stroke-width="1" marker-end="url(#tip)" class="arrow"/>`);
  }
  if (view.predicted) {
    for (const p of view.predicted) {
      const s = toScreen(p.xy);
      parts.push(`<circle cx="${s.x.toFixed(1)}" cy="${s.y.toFixed(1)}" r="8" ` +
        `fill="orange" fill-opacity="${(0.3 + 0.7 * p.weight).toFixed(2)}" class="predicted"/>`);
    }
  }
  const m = toScreen(view.minimum.xy);
  parts.push(`<circle cx="${m.x.toFixed(1)}" cy="${m.y.toFixed(1)}" r="7" ` +
    `fill="gold" stroke="black" class="actual-min" data-io="${view.minimum.io}"/>`);
  const apex = toScreen({ x: 0.5, y: SQRT3_2 });
  const left = toScreen({ x: 0, y: 0 });
  const right = toScreen({ x: 1, y: 0 });
  parts.push(`<text x="${apex.x}" y="${apex.y - 14}" text-anchor="middle" font-size="13">cache</text>`);
  parts.push(`<text x="${left.x}" y="${left.y + 18}" text-anchor="middle" font-size="13">buffer</text>`);
  parts.push(`<text x="${right.x}" y="${right.y + 18}" text-anchor="middle" font-size="13">bloom</text>`);
  parts.push("</svg>");
  return parts.join("");
}
