/**
 * Stacked-bar rendering of a crosstab response.
 *
 * The layout is a direct transcription of the API payload: one bar per
 * row label, one segment per column label (including "(none)"), and
 * every segment's extent is exactly the count in that crosstab cell.
 * No arithmetic happens here beyond cumulative offsets.
 */

import type { CrosstabJson } from "./api.js";
import { el } from "./dom.js";

export interface Segment {
  label: string;
  count: number;
  /** Cumulative extent within the bar, in count units. */
  y0: number;
  y1: number;
}

export interface Bar {
  label: string;
  total: number;
  segments: Segment[];
}

export function stackLayout(table: CrosstabJson): Bar[] {
  return table.row_labels.map((rowLabel, i) => {
    const row = table.counts[i] ?? [];
    let running = 0;
    const segments = table.col_labels.map((colLabel, j) => {
      const count = row[j] ?? 0;
      const segment = {
        label: colLabel,
        count,
        y0: running,
        y1: running + count,
      };
      running += count;
      return segment;
    });
    return { label: rowLabel, total: running, segments };
  });
}

const PLOT_HEIGHT = 240;
const BAR_WIDTH = 48;
const GAP = 24;
const PALETTE = [
  "#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
  "#eeca3b", "#b279a2", "#9d755d", "#bab0ac",
];

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  return node;
}

/** Render the chart plus its "<n> papers" caption into a fresh element. */
export function renderChart(table: CrosstabJson): HTMLElement {
  const bars = stackLayout(table);
  const maxTotal = Math.max(1, ...bars.map((bar) => bar.total));
  const width = bars.length * (BAR_WIDTH + GAP) + GAP;
  const svg = svgEl("svg", {
    width: String(Math.max(width, BAR_WIDTH)),
    height: String(PLOT_HEIGHT + 40),
    role: "img",
  });

  bars.forEach((bar, i) => {
    const x = GAP + i * (BAR_WIDTH + GAP);
    for (const [j, segment] of bar.segments.entries()) {
      if (segment.count === 0) continue;
      const h = (segment.count / maxTotal) * PLOT_HEIGHT;
      const y = PLOT_HEIGHT - (segment.y1 / maxTotal) * PLOT_HEIGHT;
      const rect = svgEl("rect", {
        x: String(x),
        y: String(y),
        width: String(BAR_WIDTH),
        height: String(h),
        fill: PALETTE[j % PALETTE.length] ?? "#888",
        "data-row": bar.label,
        "data-col": segment.label,
        "data-count": String(segment.count),
      });
      rect.appendChild(
        svgEl("title", {}),
      ).textContent = `${bar.label} / ${segment.label}: ${segment.count}`;
      svg.appendChild(rect);
    }
    const label = svgEl("text", {
      x: String(x + BAR_WIDTH / 2),
      y: String(PLOT_HEIGHT + 16),
      "text-anchor": "middle",
      "font-size": "11",
    });
    label.textContent = bar.label;
    svg.appendChild(label);
  });

  const legend = el("div", { class: "legend" });
  table.col_labels.forEach((colLabel, j) => {
    const swatch = el("span", { class: "swatch" });
    swatch.style.background = PALETTE[j % PALETTE.length] ?? "#888";
    legend.append(el("span", { class: "legend-item" }, swatch, colLabel));
  });

  const caption = el(
    "p",
    { class: "chart-caption" },
    `${table.filtered_row_count} papers`,
  );
  return el("div", { class: "chart" }, svg, legend, caption);
}
