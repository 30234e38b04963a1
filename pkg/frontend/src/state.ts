/**
 * Session state: the active dataset/model, both request forms, the theme,
 * and the in-session history of inverse-search runs.
 *
 * Forms are kept in exactly the shape the API accepts so that
 * serialization is lossless in both directions.
 */

import type { ImcResult } from "./api.js";

export type Theme = "blue" | "green" | "dark";
export const THEMES: Theme[] = ["blue", "green", "dark"];

export interface TrainForm {
  method: string;
  learners: string[];
  n_train: number | null;
  test_fraction: number;
  k: number;
  seed: number;
}

export interface ImcForm {
  mode: "experimental" | "optimization";
  polymer: string;
  target: number;
  tolerance: number;
  n_simulations: number;
  strictness: "strict" | "balanced" | "lax";
  no_allow_pct: number;
  seed: number;
  top_k: number;
}

export interface ImcRunRecord {
  id: number;
  form: ImcForm;
  result: ImcResult;
}

export interface Session {
  datasetId: string | null;
  datasetName: string;
  polymers: string[];
  modelId: string | null;
  winnerLearner: string | null;
  trainForm: TrainForm;
  imcForm: ImcForm;
  theme: Theme;
  history: ImcRunRecord[];
  busy: string | null;
}

export function defaultTrainForm(): TrainForm {
  return {
    method: "random",
    learners: ["linear", "knn", "random_forest"],
    n_train: null,
    test_fraction: 0.3,
    k: 5,
    seed: 0,
  };
}

export function defaultImcForm(): ImcForm {
  return {
    mode: "optimization",
    polymer: "",
    target: 400,
    tolerance: 100,
    n_simulations: 10000,
    strictness: "balanced",
    no_allow_pct: 0,
    seed: 0,
    top_k: 20,
  };
}

export function defaultSession(): Session {
  return {
    datasetId: null,
    datasetName: "",
    polymers: [],
    modelId: null,
    winnerLearner: null,
    trainForm: defaultTrainForm(),
    imcForm: defaultImcForm(),
    theme: "blue",
    history: [],
    busy: null,
  };
}

/** Request body for POST /train; field names match the API schema. */
export function trainRequestFromForm(form: TrainForm, datasetId: string): Record<string, unknown> {
  return {
    dataset_id: datasetId,
    method: form.method,
    learners: [...form.learners],
    n_train: form.n_train,
    test_fraction: form.test_fraction,
    k: form.k,
    seed: form.seed,
  };
}

export function trainFormFromRequest(request: Record<string, unknown>): TrainForm {
  return {
    method: request.method as string,
    learners: [...(request.learners as string[])],
    n_train: (request.n_train as number | null) ?? null,
    test_fraction: request.test_fraction as number,
    k: request.k as number,
    seed: request.seed as number,
  };
}

/** Request body for POST /models/{id}/imc. */
export function imcRequestFromForm(form: ImcForm): Record<string, unknown> {
  return {
    mode: form.mode,
    polymer: form.polymer,
    target: form.target,
    tolerance: form.tolerance,
    n_simulations: form.n_simulations,
    strictness: form.strictness,
    no_allow_pct: form.no_allow_pct,
    seed: form.seed,
    top_k: form.top_k,
  };
}

export function imcFormFromRequest(request: Record<string, unknown>): ImcForm {
  return {
    mode: request.mode as ImcForm["mode"],
    polymer: request.polymer as string,
    target: request.target as number,
    tolerance: request.tolerance as number,
    n_simulations: request.n_simulations as number,
    strictness: request.strictness as ImcForm["strictness"],
    no_allow_pct: request.no_allow_pct as number,
    seed: request.seed as number,
    top_k: request.top_k as number,
  };
}

/** Palette switch is instant: a root attribute drives CSS variables. */
export function applyTheme(theme: Theme): void {
  document.documentElement.dataset.theme = theme;
}

type Listener = (state: Session) => void;

export class Store {
  private listeners: Listener[] = [];

  constructor(public state: Session = defaultSession()) {}

  update(patch: Partial<Session>): void {
    this.state = { ...this.state, ...patch };
    if (patch.theme) applyTheme(patch.theme);
    for (const listener of this.listeners) listener(this.state);
  }

  pushRun(record: Omit<ImcRunRecord, "id">): ImcRunRecord {
    const id = this.state.history.length + 1;
    const full = { id, ...record };
    this.update({ history: [...this.state.history, full] });
    return full;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}
