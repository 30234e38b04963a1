/** Other Results tab: winner details, feasibility counts, downloads. */

import type { FeasibilityStatus, ModelInfo } from "../api.js";
import { el } from "../format.js";

export function renderWinnerDetails(model: ModelInfo | null): HTMLElement {
  if (!model?.winner) {
    return el("p", { class: "hint", text: "Train a model to see its configuration here." });
  }
  const params = Object.entries(model.winner.params)
    .map(([key, value]) => `${key}=${String(value)}`)
    .join(", ");
  return el("div", { class: "winner-details" }, [
    el("p", { text: `winner: ${model.winner.learner} via ${model.winner.method} sampling` }),
    el("p", { text: params ? `hyperparameters: ${params}` : "hyperparameters: defaults" }),
  ]);
}

export function renderDownloads(
  bundleUrl: string | null,
  drawsUrl: string | null,
): HTMLElement {
  const root = el("div", { class: "downloads" });
  if (bundleUrl) {
    root.append(el("a", { href: bundleUrl, class: "download", text: "download model bundle" }));
  }
  if (drawsUrl) {
    root.append(el("a", { href: drawsUrl, class: "download", text: "export draw table (CSV)" }));
  }
  if (!bundleUrl && !drawsUrl) {
    root.append(el("p", { class: "hint", text: "Nothing to download yet." }));
  }
  return root;
}

export function renderRatingCounts(status: FeasibilityStatus): HTMLElement {
  const list = el("ul", { class: "rating-counts" });
  for (const [rating, count] of Object.entries(status.ratings)) {
    list.append(el("li", { text: `${rating}: ${count} pairs` }));
  }
  return list;
}
