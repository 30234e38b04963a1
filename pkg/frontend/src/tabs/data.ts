/** Data & Preprocessing tab: upload outcome, summary table, feasibility. */

import type { FeasibilityStatus, IngestReport, SummaryRow } from "../api.js";
import { el, fmt, fmtInt } from "../format.js";

export function renderIngestReport(report: IngestReport): HTMLElement {
  const drops = Object.entries(report.drops);
  const lines = [
    `rows kept: ${report.rows_out} / ${report.rows_in}`,
    drops.length
      ? "dropped: " + drops.map(([why, n]) => `${why} (${n})`).join(", ")
      : "dropped: none",
    `solvent ratios defaulted: ${report.ratio_defaulted}`,
  ];
  const renames = Object.keys(report.header_renames).length + Object.keys(report.solvent_renames).length;
  if (renames > 0) lines.push(`harmonized names: ${renames}`);
  return el(
    "div",
    { class: "ingest-report" },
    lines.map((text) => el("p", { text })),
  );
}

export function renderSummaryTable(rows: SummaryRow[]): HTMLElement {
  const header = ["polymer", "n", "mean", "std dev", "q1", "median", "q3", "skew", "kurtosis"];
  const table = el("table", { class: "summary-table" });
  table.append(
    el("thead", {}, [el("tr", {}, header.map((text) => el("th", { text })))]),
  );
  const body = el("tbody");
  for (const row of rows) {
    body.append(
      el("tr", row.polymer === "TOTAL" ? { class: "total-row" } : {}, [
        el("td", { text: row.polymer }),
        el("td", { text: fmtInt(row.n) }),
        el("td", { text: fmt(row.mean) }),
        el("td", { text: fmt(row.std_dev) }),
        el("td", { text: fmt(row.q1) }),
        el("td", { text: fmt(row.median) }),
        el("td", { text: fmt(row.q3) }),
        el("td", { text: fmt(row.skewness) }),
        el("td", { text: fmt(row.excess_kurtosis) }),
      ]),
    );
  }
  table.append(body);
  return table;
}

export function renderFeasibilityStatus(status: FeasibilityStatus): HTMLElement {
  const counts = ["OK", "COND", "NO"]
    .map((rating) => `${rating} ${status.ratings[rating] ?? 0}`)
    .join("  ");
  const root = el("div", { class: "feasibility-status" }, [
    el("p", { text: `solubility ratings: ${counts}` }),
    el("p", { text: `incompatible solvent pairs: ${status.incompatible_pairs}` }),
  ]);
  for (const warning of status.warnings) {
    root.append(el("p", { class: "warning", text: warning }));
  }
  return root;
}
