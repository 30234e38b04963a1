/** Metrics tab: sortable comparison table, winner banner, diagnostics. */

import type { Diagnostics, EvalReport, EvalRow } from "../api.js";
import { el, fmt } from "../format.js";
import { densityPlot, scatterPlot } from "../plots.js";

const COLUMNS: { label: string; value: (row: EvalRow) => number | string }[] = [
  { label: "method", value: (r) => r.method },
  { label: "learner", value: (r) => r.learner },
  { label: "test RMSE", value: (r) => r.test?.rmse ?? Number.POSITIVE_INFINITY },
  { label: "cv RMSE", value: (r) => r.cv.rmse },
  { label: "test MAE", value: (r) => r.test?.mae ?? Number.POSITIVE_INFINITY },
  { label: "test R2", value: (r) => r.test?.r2 ?? Number.NEGATIVE_INFINITY },
  { label: "cv R2", value: (r) => r.cv.r2 },
];

function cellText(row: EvalRow, column: number): string {
  switch (column) {
    case 0: return row.method;
    case 1: return row.learner;
    case 2: return fmt(row.test ? row.test.rmse : null);
    case 3: return fmt(row.cv.rmse);
    case 4: return fmt(row.test ? row.test.mae : null);
    case 5: return row.test && row.test.r2_defined ? fmt(row.test.r2, 4) : "-";
    default: return row.cv.r2_defined ? fmt(row.cv.r2, 4) : "-";
  }
}

export function bestRow(report: EvalReport): EvalRow {
  return [...report.rows].sort(
    (a, b) =>
      (a.test?.rmse ?? Number.POSITIVE_INFINITY) - (b.test?.rmse ?? Number.POSITIVE_INFINITY) ||
      a.cv.rmse - b.cv.rmse,
  )[0];
}

export function renderBestBanner(report: EvalReport): HTMLElement {
  const best = bestRow(report);
  return el("div", { class: "banner best-banner" }, [
    el("strong", { text: `best model: ${best.learner} (${best.method})` }),
    el("span", {
      text: ` test RMSE ${fmt(best.test ? best.test.rmse : null)} nm over ${report.n_test} held-out rows`,
    }),
  ]);
}

export function renderMetricsTable(report: EvalReport): HTMLElement {
  const table = el("table", { class: "metrics-table" });
  const headRow = el("tr");
  let rows = [...report.rows];
  let sortBy = -1;
  let ascending = true;

  const body = el("tbody");
  const fill = () => {
    body.replaceChildren(
      ...rows.map((row) =>
        el("tr", {}, COLUMNS.map((_, c) => el("td", { text: cellText(row, c) }))),
      ),
    );
  };

  COLUMNS.forEach((column, index) => {
    const th = el("th", { text: column.label, "data-sort": "none" });
    th.addEventListener("click", () => {
      ascending = sortBy === index ? !ascending : true;
      sortBy = index;
      rows = [...rows].sort((a, b) => {
        const va = column.value(a);
        const vb = column.value(b);
        const order = typeof va === "string" ? String(va).localeCompare(String(vb)) : Number(va) - Number(vb);
        return ascending ? order : -order;
      });
      fill();
    });
    headRow.append(th);
  });
  table.append(el("thead", {}, [headRow]));
  fill();
  table.append(body);
  return table;
}

export function renderEmptyMetrics(): HTMLElement {
  return el("div", { class: "empty-state" }, [
    el("p", { text: "No trained model yet." }),
    el("p", { text: "Upload a dataset and start a training run from the sidebar." }),
  ]);
}

export function renderDiagnostics(diag: Diagnostics): HTMLElement {
  const root = el("div", { class: "diagnostics" });
  const flagText = diag.flags.length ? diag.flags.join(", ") : "none";
  root.append(
    el("p", { class: "flags", text: `flags: ${flagText}` }),
    el("p", {
      text:
        `residual trend slope ${fmt(diag.slope, 4)}; variance ratio ${fmt(diag.variance_ratio, 2)}; ` +
        `largest tail deviation ${fmt(diag.tail_deviation_ses, 2)} SEs`,
    }),
  );
  const panel = el("div", { class: "plot-row" });
  const observed = el("figure", {}, [scatterPlot(diag.predicted, diag.observed, true)]);
  observed.append(el("figcaption", { text: "observed vs predicted" }));
  const residuals = el("figure", {}, [scatterPlot(diag.predicted, diag.residuals)]);
  residuals.append(el("figcaption", { text: "residuals vs fitted" }));
  const qq = el("figure", {}, [scatterPlot(diag.qq_theoretical, diag.qq_sample, true)]);
  qq.append(el("figcaption", { text: "residual QQ" }));
  panel.append(observed, residuals, qq);
  root.append(panel);
  return root;
}

export function renderPredictionDensity(values: number[], lo: number, hi: number): HTMLElement {
  const figure = el("figure", { class: "density" }, [densityPlot(values, lo, hi)]);
  figure.append(el("figcaption", { text: "predicted diameter density with tolerance band" }));
  return figure;
}
