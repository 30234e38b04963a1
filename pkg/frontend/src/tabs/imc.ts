/** Inverse Monte Carlo tab: summary cards, top candidates, run history. */

import type { ImcResult, TopCandidate } from "../api.js";
import { el, fmt, fmtInt, fmtRate } from "../format.js";
import type { ImcRunRecord } from "../state.js";

function card(label: string, value: string, hint = ""): HTMLElement {
  const node = el("div", { class: "card", "data-card": label }, [
    el("div", { class: "card-label", text: label }),
    el("div", { class: "card-value", text: value }),
  ]);
  if (hint) node.append(el("div", { class: "card-hint", text: hint }));
  return node;
}

/**
 * Acceptance rate only exists when candidates were synthesized and vetoed;
 * replayed observed settings are accepted by construction, so the card is
 * omitted entirely in that mode.
 */
export function renderImcCards(result: ImcResult): HTMLElement {
  const root = el("div", { class: "card-grid" });
  root.append(
    card("Predicted mean", `${fmt(result.predicted_mean, 1)} nm`, `sd ${fmt(result.predicted_sd, 1)} nm`),
    card("Error to target", `${fmt(result.rmse_to_target, 1)} nm RMSE`, `${fmt(result.mae_to_target, 1)} nm MAE`),
    card(
      "Success probability",
      fmtRate(result.success_rate),
      `${fmtInt(result.n_success)} in band of ${fmtInt(result.n_accepted)} accepted`,
    ),
  );
  if (result.acceptance_rate !== null) {
    root.append(
      card(
        "Acceptance rate",
        fmtRate(result.acceptance_rate),
        `${fmtInt(result.n_accepted)} of ${fmtInt(result.n_simulations)} draws`,
      ),
    );
  }
  return root;
}

function settingsSummary(candidate: TopCandidate): string {
  const parts: string[] = [];
  for (const i of [1, 2, 3]) {
    const name = candidate.settings[`solvent_${i}`];
    const ratio = candidate.settings[`solvent${i}_ratio`];
    if (name) parts.push(`${name} ${fmt(Number(ratio), 0)}%`);
  }
  return parts.join(", ");
}

function sourceCell(candidate: TopCandidate): HTMLElement {
  const doi = candidate.settings["doi"];
  if (typeof doi === "string" && doi.length > 0) {
    return el("td", {}, [
      el("a", { href: `https://doi.org/${doi}`, target: "_blank", rel: "noopener", text: doi }),
    ]);
  }
  return el("td", { text: candidate.source });
}

export function renderTopTable(candidates: TopCandidate[]): HTMLElement {
  const header = ["rank", "prediction (nm)", "|error| (nm)", "flag", "solvents", "source"];
  const table = el("table", { class: "top-table" });
  const headRow = el("tr");
  let rows = [...candidates];
  const body = el("tbody");
  const fill = () => {
    body.replaceChildren(
      ...rows.map((c) =>
        el("tr", {}, [
          el("td", { text: String(c.rank) }),
          el("td", { text: fmt(c.prediction, 1) }),
          el("td", { text: fmt(c.abs_error, 1) }),
          el("td", { text: c.solubility_flag }),
          el("td", { text: settingsSummary(c) }),
          sourceCell(c),
        ]),
      ),
    );
  };
  const keys: ((c: TopCandidate) => number | string)[] = [
    (c) => c.rank,
    (c) => c.prediction,
    (c) => c.abs_error,
    (c) => c.solubility_flag,
    (c) => settingsSummary(c),
    (c) => c.source,
  ];
  header.forEach((label, index) => {
    const th = el("th", { text: label });
    let ascending = true;
    th.addEventListener("click", () => {
      rows = [...rows].sort((a, b) => {
        const va = keys[index](a);
        const vb = keys[index](b);
        const order = typeof va === "string" ? String(va).localeCompare(String(vb)) : Number(va) - Number(vb);
        return ascending ? order : -order;
      });
      ascending = !ascending;
      fill();
    });
    headRow.append(th);
  });
  table.append(el("thead", {}, [headRow]));
  fill();
  table.append(body);
  return table;
}

export function renderNotes(result: ImcResult): HTMLElement {
  const root = el("div", { class: "imc-notes" });
  if (result.fallback_full_dataset) {
    root.append(el("p", { class: "warning", text: "thin polymer subset: full-dataset ranges used" }));
  }
  if (result.unknown_pair_draws > 0) {
    root.append(
      el("p", { class: "warning", text: `${result.unknown_pair_draws} draws used unrated solvent pairs` }),
    );
  }
  for (const note of result.notes) root.append(el("p", { text: note }));
  return root;
}

/**
 * Side-by-side comparison of every run this session, in run order, so the
 * next target/tolerance/strictness choice can react to the last result.
 */
export function renderHistoryComparison(history: ImcRunRecord[]): HTMLElement {
  const root = el("div", { class: "history" });
  if (history.length < 2) {
    root.append(el("p", { class: "hint", text: "Run at least two searches to compare." }));
    return root;
  }
  const header = ["run", "mode", "strictness", "target ± tol", "acceptance", "success"];
  const table = el("table", { class: "history-table" });
  table.append(el("thead", {}, [el("tr", {}, header.map((text) => el("th", { text })))]));
  const body = el("tbody");
  for (const record of history) {
    const r = record.result;
    body.append(
      el("tr", { "data-run": String(record.id) }, [
        el("td", { text: `#${record.id}` }),
        el("td", { text: r.mode }),
        el("td", { text: r.strictness }),
        el("td", { text: `${fmt(r.target, 0)} ± ${fmt(r.tolerance, 0)}` }),
        el("td", { class: "acceptance", text: fmtRate(r.acceptance_rate) }),
        el("td", { class: "success", text: fmtRate(r.success_rate) }),
      ]),
    );
  }
  table.append(body);
  root.append(table);
  return root;
}
