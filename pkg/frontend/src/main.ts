/** Application shell: tab bar, sidebar wiring, API calls, job polling. */

import { Api, ApiError, pollJob } from "./api.js";
import type {
  Diagnostics,
  EvalReport,
  FeasibilityStatus,
  ImcResult,
  ImportanceReport,
  IngestReport,
  ModelInfo,
  PolymerCount,
  SummaryRow,
  Surface,
} from "./api.js";
import { el } from "./format.js";
import { renderSidebar } from "./sidebar.js";
import { Store, defaultSession, imcRequestFromForm, trainRequestFromForm } from "./state.js";
import type { ImcForm, TrainForm } from "./state.js";
import { renderFeasibilityStatus, renderIngestReport, renderSummaryTable } from "./tabs/data.js";
import {
  renderBestBanner,
  renderDiagnostics,
  renderEmptyMetrics,
  renderMetricsTable,
  renderPredictionDensity,
} from "./tabs/metrics.js";
import { renderHistoryComparison, renderImcCards, renderNotes, renderTopTable } from "./tabs/imc.js";
import { renderImportance, renderSurface } from "./tabs/interpret.js";
import { renderDownloads, renderRatingCounts, renderWinnerDetails } from "./tabs/other.js";

const TABS = [
  "Data & Preprocessing",
  "Metrics",
  "Inverse Monte Carlo",
  "Interpretability",
  "Other Results",
] as const;

type TabName = (typeof TABS)[number];

interface Caches {
  ingest: IngestReport | null;
  summary: SummaryRow[] | null;
  feasibility: FeasibilityStatus | null;
  report: EvalReport | null;
  diagnostics: Diagnostics | null;
  importance: ImportanceReport | null;
  imc: ImcResult | null;
  imcExport: string | null;
  winner: ModelInfo["winner"];
  surface: Surface | null;
}

export function createShell(root: HTMLElement, api: Api): Store {
  const store = new Store(defaultSession());
  const caches: Caches = {
    ingest: null,
    summary: null,
    feasibility: null,
    report: null,
    diagnostics: null,
    importance: null,
    imc: null,
    imcExport: null,
    winner: null,
    surface: null,
  };
  let activeTab: TabName = TABS[0];

  const sidebarSlot = el("div", { class: "sidebar-slot" });
  const tabBar = el("nav", { class: "tab-bar" });
  const panel = el("main", { class: "panel" });
  root.append(sidebarSlot, el("div", { class: "content" }, [tabBar, panel]));

  function setBusy(message: string | null): void {
    store.update({ busy: message });
  }

  function fail(err: unknown): void {
    const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    setBusy(`error: ${message}`);
  }

  async function handleUpload(file: File): Promise<void> {
    setBusy("uploading dataset");
    try {
      const text = await file.text();
      const uploaded = await api.uploadDataset(text, file.name);
      caches.ingest = uploaded.report;
      caches.summary = await api.get<SummaryRow[]>(`/datasets/${uploaded.dataset_id}/summary`);
      caches.feasibility = await api.get<FeasibilityStatus>("/feasibility");
      const polymers = await api.get<PolymerCount[]>(`/datasets/${uploaded.dataset_id}/polymers`);
      store.update({
        datasetId: uploaded.dataset_id,
        datasetName: file.name,
        polymers: polymers.map((p) => p.name),
        modelId: null,
        winnerLearner: null,
        busy: null,
      });
    } catch (err) {
      fail(err);
    }
  }

  async function handleTrain(form: TrainForm): Promise<void> {
    const state = store.state;
    if (!state.datasetId) return;
    store.update({ trainForm: form, busy: "training" });
    try {
      const job = await api.post<{ job_id: string }>(
        "/train",
        trainRequestFromForm(form, state.datasetId),
      );
      const result = await pollJob<{
        model_id: string;
        winner: { learner: string; params: Record<string, unknown>; method: string };
      }>(api, job.job_id);
      caches.report = await api.get<EvalReport>(`/models/${result.model_id}/metrics`);
      caches.diagnostics = await api.get<Diagnostics>(`/models/${result.model_id}/diagnostics`);
      caches.importance = await api.get<ImportanceReport>(`/models/${result.model_id}/importance`);
      caches.winner = result.winner;
      try {
        caches.surface = await api.post<Surface>(`/models/${result.model_id}/surface`, {
          var_a: "solution_concentration",
          var_b: "voltage",
        });
      } catch {
        caches.surface = null;
      }
      store.update({ modelId: result.model_id, winnerLearner: result.winner.learner, busy: null });
    } catch (err) {
      fail(err);
    }
  }

  async function handleImc(form: ImcForm): Promise<void> {
    const state = store.state;
    if (!state.modelId) return;
    store.update({ imcForm: form, busy: "running inverse search" });
    try {
      const job = await api.post<{ job_id: string }>(
        `/models/${state.modelId}/imc`,
        imcRequestFromForm(form),
      );
      const result = await pollJob<ImcResult>(api, job.job_id);
      caches.imc = result;
      caches.imcExport = result.draws_export ?? null;
      store.pushRun({ form, result });
      setBusy(null);
    } catch (err) {
      fail(err);
    }
  }

  function renderTabBar(): void {
    tabBar.replaceChildren();
    for (const name of TABS) {
      const button = el("button", {
        type: "button",
        class: name === activeTab ? "tab active" : "tab",
        "data-tab": name,
        text: name,
      });
      button.addEventListener("click", () => {
        activeTab = name;
        render();
      });
      tabBar.append(button);
    }
  }

  function renderPanel(): void {
    const state = store.state;
    panel.replaceChildren();
    if (activeTab === "Data & Preprocessing") {
      if (!caches.ingest) {
        panel.append(el("p", { class: "empty-state", text: "Upload a dataset to begin." }));
        return;
      }
      panel.append(renderIngestReport(caches.ingest));
      if (caches.summary) panel.append(renderSummaryTable(caches.summary));
      if (caches.feasibility) panel.append(renderFeasibilityStatus(caches.feasibility));
    } else if (activeTab === "Metrics") {
      if (!caches.report) {
        panel.append(renderEmptyMetrics());
        return;
      }
      panel.append(renderBestBanner(caches.report));
      panel.append(renderMetricsTable(caches.report));
      if (caches.diagnostics) panel.append(renderDiagnostics(caches.diagnostics));
    } else if (activeTab === "Inverse Monte Carlo") {
      if (!caches.imc) {
        panel.append(
          el("p", {
            class: "empty-state",
            text: state.modelId
              ? "Run an inverse search from the sidebar."
              : "Train a model first; the inverse search needs one.",
          }),
        );
        panel.append(renderHistoryComparison(state.history));
        return;
      }
      panel.append(renderImcCards(caches.imc));
      panel.append(
        renderPredictionDensity(
          caches.imc.top_candidates.map((c) => c.prediction),
          caches.imc.target - caches.imc.tolerance,
          caches.imc.target + caches.imc.tolerance,
        ),
      );
      panel.append(renderTopTable(caches.imc.top_candidates));
      panel.append(renderNotes(caches.imc));
      panel.append(renderHistoryComparison(state.history));
    } else if (activeTab === "Interpretability") {
      if (!caches.importance) {
        panel.append(el("p", { class: "empty-state", text: "Train a model to see feature importance." }));
        return;
      }
      panel.append(renderImportance(caches.importance));
      if (caches.surface) panel.append(renderSurface(caches.surface));
    } else {
      panel.append(
        renderWinnerDetails(
          state.modelId
            ? { model_id: state.modelId, dataset_id: state.datasetId ?? "", winner: caches.winner }
            : null,
        ),
      );
      panel.append(
        renderDownloads(
          state.modelId ? api.bundleUrl(state.modelId) : null,
          caches.imcExport ? api.exportUrl(caches.imcExport) : null,
        ),
      );
      if (caches.feasibility) panel.append(renderRatingCounts(caches.feasibility));
    }
  }

  function render(): void {
    sidebarSlot.replaceChildren(
      renderSidebar(store.state, {
        onUpload: handleUpload,
        onTrain: handleTrain,
        onImc: handleImc,
        onTheme: (theme) => store.update({ theme }),
      }),
    );
    renderTabBar();
    renderPanel();
  }

  store.subscribe(render);
  render();
  return store;
}

if (typeof document !== "undefined") {
  const mount = document.getElementById("app");
  if (mount) {
    createShell(mount, new Api(""));
  }
}
