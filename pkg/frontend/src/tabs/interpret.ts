/** Interpretability tab: importance bars and the two-variable surface. */

import type { ImportanceReport, Surface } from "../api.js";
import { el, fmt } from "../format.js";
import { barChart, heatmap } from "../plots.js";

export function renderImportance(report: ImportanceReport): HTMLElement {
  const ranked = [...report.features].sort((a, b) => a.rank - b.rank);
  const root = el("div", { class: "importance" }, [
    el("p", {
      text: `baseline RMSE ${fmt(report.baseline_rmse, 2)} nm, ${report.repeats} permutation repeats`,
    }),
    barChart(ranked.map((f) => f.feature), ranked.map((f) => f.score)),
  ]);
  const list = el("ol", { class: "importance-list" });
  for (const feature of ranked) {
    list.append(el("li", { text: `${feature.feature}: ${fmt(feature.score, 3)}` }));
  }
  root.append(list);
  return root;
}

export function renderSurface(surface: Surface): HTMLElement {
  const fixed = Object.entries(surface.fixed)
    .slice(0, 6)
    .map(([key, value]) => `${key}=${typeof value === "number" ? fmt(value, 1) : String(value)}`)
    .join(", ");
  return el("div", { class: "surface" }, [
    el("p", { text: `predicted diameter over ${surface.var_a} × ${surface.var_b}` }),
    heatmap(surface.matrix, surface.grid_a, surface.grid_b),
    el("p", { class: "hint", text: `held fixed: ${fixed}` }),
  ]);
}
