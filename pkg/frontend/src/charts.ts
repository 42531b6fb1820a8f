/** Bar-chart rendering for the per-stage critic attribute histograms. */

import type { HistogramBar } from "./state.js";

/** Replace `container` contents with one vertical bar per attribute. */
export function renderHistogram(container: HTMLElement, bars: HistogramBar[]): void {
  container.textContent = "";
  for (const bar of bars) {
    const cell = document.createElement("div");
    cell.className = "bar-cell";

    const value = document.createElement("div");
    value.className = "bar-value";
    value.textContent = bar.probability.toFixed(2);

    const column = document.createElement("div");
    column.className = "bar-column";
    const fill = document.createElement("div");
    fill.className = "bar-fill";
    const pct = Math.max(0, Math.min(1, bar.probability)) * 100;
    fill.style.height = `${pct.toFixed(1)}%`;
    column.appendChild(fill);

    const label = document.createElement("div");
    label.className = "bar-label";
    label.textContent = bar.name;
    label.title = bar.name;

    cell.append(value, column, label);
    container.appendChild(cell);
  }
}
