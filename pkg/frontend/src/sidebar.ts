/** Left sidebar: dataset upload, training form, inverse-search form, theme. */

import { el } from "./format.js";
import type { ImcForm, Session, Theme, TrainForm } from "./state.js";
import { THEMES } from "./state.js";

const LEARNERS = ["linear", "elastic_net", "knn", "tree", "random_forest", "gradient_boosting"];
const METHODS = ["random", "sobol_doptimal", "balanced"];
const FOLDS = [3, 5, 10];

function numberInput(name: string, value: number, step = "1"): HTMLInputElement {
  const input = el("input", { type: "number", name, step });
  input.value = String(value);
  return input;
}

function labeled(text: string, control: HTMLElement): HTMLElement {
  return el("label", { class: "field" }, [el("span", { text }), control]);
}

export function renderTrainForm(form: TrainForm, enabled: boolean): HTMLFieldSetElement {
  const fieldset = el("fieldset", { class: "train-form" }) as HTMLFieldSetElement;
  fieldset.disabled = !enabled;
  fieldset.append(el("legend", { text: "Training" }));
  if (!enabled) {
    fieldset.append(el("p", { class: "hint", text: "Upload a dataset to enable training." }));
  }

  const method = el("select", { name: "method" }) as HTMLSelectElement;
  for (const m of METHODS) method.append(el("option", { value: m, text: m }));
  method.value = form.method;
  fieldset.append(labeled("sampling method", method));

  const size = numberInput("n_train", form.n_train ?? 0);
  size.placeholder = "all rows";
  if (form.n_train === null) size.value = "";
  fieldset.append(labeled("training rows", size));

  const fraction = numberInput("test_fraction", form.test_fraction, "0.05");
  fraction.min = "0.10";
  fraction.max = "0.40";
  fieldset.append(labeled("test fraction", fraction));

  const folds = el("select", { name: "k" }) as HTMLSelectElement;
  for (const k of FOLDS) folds.append(el("option", { value: String(k), text: `${k}-fold` }));
  folds.value = String(form.k);
  fieldset.append(labeled("cross-validation", folds));

  const checklist = el("div", { class: "learner-checklist" });
  for (const kind of LEARNERS) {
    const box = el("input", { type: "checkbox", name: "learners", value: kind }) as HTMLInputElement;
    box.checked = form.learners.includes(kind);
    checklist.append(el("label", {}, [box, el("span", { text: kind })]));
  }
  fieldset.append(labeled("learners", checklist));
  fieldset.append(labeled("seed", numberInput("seed", form.seed)));
  fieldset.append(el("button", { type: "submit", class: "primary", text: "Train" }));
  return fieldset;
}

/** Inverse-search controls stay disabled until a model is active. */
export function renderImcForm(
  form: ImcForm,
  polymers: string[],
  modelActive: boolean,
): HTMLFieldSetElement {
  const fieldset = el("fieldset", { class: "imc-form" }) as HTMLFieldSetElement;
  fieldset.disabled = !modelActive;
  fieldset.append(el("legend", { text: "Inverse search" }));
  if (!modelActive) {
    fieldset.append(el("p", { class: "hint", text: "Train or load a model to enable the inverse search." }));
  }

  const mode = el("select", { name: "mode" }) as HTMLSelectElement;
  for (const m of ["experimental", "optimization"]) mode.append(el("option", { value: m, text: m }));
  mode.value = form.mode;
  fieldset.append(labeled("mode", mode));

  const polymer = el("select", { name: "polymer" }) as HTMLSelectElement;
  for (const p of polymers) polymer.append(el("option", { value: p, text: p }));
  if (form.polymer) polymer.value = form.polymer;
  fieldset.append(labeled("polymer", polymer));

  fieldset.append(labeled("target (nm)", numberInput("target", form.target, "any")));
  fieldset.append(labeled("tolerance (nm)", numberInput("tolerance", form.tolerance, "any")));

  const strictness = el("select", { name: "strictness" }) as HTMLSelectElement;
  for (const s of ["strict", "balanced", "lax"]) strictness.append(el("option", { value: s, text: s }));
  strictness.value = form.strictness;
  fieldset.append(labeled("strictness", strictness));

  fieldset.append(labeled("NO allowance (%)", numberInput("no_allow_pct", form.no_allow_pct, "0.5")));
  fieldset.append(labeled("draws", numberInput("n_simulations", form.n_simulations)));
  fieldset.append(labeled("seed", numberInput("seed", form.seed)));
  fieldset.append(el("button", { type: "submit", class: "primary", text: "Run search" }));
  return fieldset;
}

export function renderThemePicker(active: Theme, onPick: (theme: Theme) => void): HTMLElement {
  const root = el("div", { class: "theme-picker" });
  for (const theme of THEMES) {
    const button = el("button", {
      type: "button",
      class: theme === active ? "theme active" : "theme",
      "data-theme-choice": theme,
      text: theme,
    });
    button.addEventListener("click", () => onPick(theme));
    root.append(button);
  }
  return root;
}

export function renderSidebar(
  state: Session,
  handlers: {
    onUpload: (file: File) => void;
    onTrain: (form: TrainForm) => void;
    onImc: (form: ImcForm) => void;
    onTheme: (theme: Theme) => void;
  },
): HTMLElement {
  const root = el("aside", { class: "sidebar" });
  root.append(el("h1", { text: "spindesign" }));

  const upload = el("input", { type: "file", accept: ".csv,.tsv" }) as HTMLInputElement;
  upload.addEventListener("change", () => {
    if (upload.files?.[0]) handlers.onUpload(upload.files[0]);
  });
  root.append(labeled("dataset (CSV/TSV)", upload));
  root.append(
    el("p", {
      class: "dataset-line",
      text: state.datasetId ? `active: ${state.datasetName || state.datasetId}` : "no dataset loaded",
    }),
  );

  const trainFormEl = el("form", { class: "train" });
  const trainFields = renderTrainForm(state.trainForm, state.datasetId !== null);
  trainFormEl.append(trainFields);
  trainFormEl.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.onTrain(readTrainForm(trainFields, state.trainForm));
  });
  root.append(trainFormEl);

  const imcFormEl = el("form", { class: "imc" });
  const imcFields = renderImcForm(state.imcForm, state.polymers, state.modelId !== null);
  imcFormEl.append(imcFields);
  imcFormEl.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.onImc(readImcForm(imcFields, state.imcForm));
  });
  root.append(imcFormEl);

  root.append(renderThemePicker(state.theme, handlers.onTheme));
  if (state.busy) root.append(el("p", { class: "busy", text: state.busy }));
  return root;
}

function field<T extends HTMLElement>(root: HTMLElement, name: string): T {
  return root.querySelector(`[name="${name}"]`) as T;
}

export function readTrainForm(root: HTMLElement, fallback: TrainForm): TrainForm {
  const size = field<HTMLInputElement>(root, "n_train").value;
  const learners = Array.from(
    root.querySelectorAll<HTMLInputElement>('input[name="learners"]:checked'),
  ).map((box) => box.value);
  return {
    method: field<HTMLSelectElement>(root, "method").value,
    learners: learners.length ? learners : fallback.learners,
    n_train: size === "" ? null : Number(size),
    test_fraction: Number(field<HTMLInputElement>(root, "test_fraction").value),
    k: Number(field<HTMLSelectElement>(root, "k").value),
    seed: Number(field<HTMLInputElement>(root, "seed").value),
  };
}

export function readImcForm(root: HTMLElement, fallback: ImcForm): ImcForm {
  return {
    mode: field<HTMLSelectElement>(root, "mode").value as ImcForm["mode"],
    polymer: field<HTMLSelectElement>(root, "polymer").value || fallback.polymer,
    target: Number(field<HTMLInputElement>(root, "target").value),
    tolerance: Number(field<HTMLInputElement>(root, "tolerance").value),
    n_simulations: Number(field<HTMLInputElement>(root, "n_simulations").value),
    strictness: field<HTMLSelectElement>(root, "strictness").value as ImcForm["strictness"],
    no_allow_pct: Number(field<HTMLInputElement>(root, "no_allow_pct").value),
    seed: Number(field<HTMLInputElement>(root, "seed").value),
    top_k: fallback.top_k,
  };
}
