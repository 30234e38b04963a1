/**
 * Thin typed client over the spindesign HTTP API.
 *
 * Every number the UI displays comes out of one of these response
 * shapes; nothing is computed client-side beyond presentation.
 */

export interface IngestReport {
  rows_in: number;
  rows_out: number;
  drops: Record<string, number>;
  ratio_defaulted: number;
  header_renames: Record<string, string>;
  solvent_renames: Record<string, string>;
}

export interface UploadResponse {
  dataset_id: string;
  fingerprint: string;
  reused: boolean;
  report: IngestReport;
}

export interface DatasetInfo {
  dataset_id: string;
  name: string;
  rows: number;
  polymers: number;
  fingerprint: string;
}

export interface SummaryRow {
  polymer: string;
  n: number;
  mean: number;
  std_dev: number;
  q1: number;
  median: number;
  q3: number;
  skewness: number | null;
  excess_kurtosis: number | null;
}

export interface PolymerCount {
  name: string;
  rows: number;
}

export interface FeasibilityStatus {
  ratings: Record<string, number>;
  pairs: number;
  incompatible_pairs: number;
  incompatibility_fallback: boolean;
  warnings: string[];
  strictness_thresholds: Record<string, number>;
}

export interface MetricSet {
  rmse: number;
  mae: number;
  mape: number;
  r2: number;
  n: number;
  mape_skipped: number;
  r2_defined: boolean;
}

export interface EvalRow {
  method: string;
  learner: string;
  params: Record<string, unknown>;
  cv: MetricSet;
  test: MetricSet | null;
  deltas: Record<string, number> | null;
}

export interface EvalReport {
  rows: EvalRow[];
  k: number;
  test_fraction: number;
  n_test: number;
  seed: number;
  selection_rule: string;
  warnings: string[];
}

export interface Diagnostics {
  flags: string[];
  slope: number;
  variance_ratio: number;
  tail_deviation_ses: number;
  observed: number[];
  predicted: number[];
  residuals: number[];
  qq_theoretical: number[];
  qq_sample: number[];
}

export interface ImportanceFeature {
  feature: string;
  score: number;
  raw_mean: number;
  std_error: number;
  rank: number;
}

export interface ImportanceReport {
  baseline_rmse: number;
  repeats: number;
  seed: number;
  features: ImportanceFeature[];
}

export interface Surface {
  var_a: string;
  var_b: string;
  grid_a: number[];
  grid_b: number[];
  matrix: number[][];
  fixed: Record<string, unknown>;
}

export interface TopCandidate {
  rank: number;
  prediction: number;
  abs_error: number;
  solubility_flag: string;
  source: string;
  settings: Record<string, unknown>;
}

export interface ImcResult {
  mode: string;
  polymer: string;
  target: number;
  tolerance: number;
  n_simulations: number;
  seed: number;
  strictness: string;
  no_allow_pct: number;
  n_accepted: number;
  n_success: number;
  acceptance_rate: number | null;
  success_rate: number | null;
  success_rate_unconditional: number | null;
  predicted_mean: number | null;
  predicted_sd: number | null;
  rmse_to_target: number | null;
  mae_to_target: number | null;
  fallback_full_dataset: boolean;
  pool_rows: number;
  unknown_pair_draws: number;
  notes: string[];
  top_candidates: TopCandidate[];
  draws_export?: string;
  model_id?: string;
}

export interface Job {
  job_id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  progress: number;
  message: string;
  error: { code: string; message: string } | null;
  result: unknown;
}

export interface ModelInfo {
  model_id: string;
  dataset_id: string;
  winner: { learner: string; params: Record<string, unknown>; method: string } | null;
}

/** API failure with the server's machine-readable error code attached. */
export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function toError(response: { status: number; json(): Promise<unknown> }): Promise<ApiError> {
  let code = "unknown_error";
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as { detail?: { code?: string; message?: string } };
    if (body.detail?.code) code = body.detail.code;
    if (body.detail?.message) message = body.detail.message;
  } catch {
    // non-JSON body; keep the defaults
  }
  return new ApiError(response.status, code, message);
}

export class Api {
  constructor(public base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.base + path, init);
    if (!response.ok) throw await toError(response);
    return (await response.json()) as T;
  }

  get<T>(path: string): Promise<T> {
    return this.request<T>(path);
  }

  post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  /** Datasets upload as a raw CSV body, not a form. */
  uploadDataset(text: string, name?: string): Promise<UploadResponse> {
    const query = name ? `?name=${encodeURIComponent(name)}` : "";
    return this.request<UploadResponse>(`/datasets${query}`, {
      method: "POST",
      headers: { "content-type": "text/csv" },
      body: text,
    });
  }

  exportUrl(exportId: string): string {
    return `${this.base}/exports/${exportId}`;
  }

  bundleUrl(modelId: string): string {
    return `${this.base}/models/${modelId}/bundle`;
  }
}

/**
 * Poll a job until it reaches a terminal state. Resolves with the job's
 * result payload, rejects with the job error message on failure.
 */
export function pollJob<T = unknown>(
  api: Api,
  jobId: string,
  intervalMs = 400,
  onProgress?: (job: Job) => void,
): Promise<T> {
  return new Promise((resolve, reject) => {
    const tick = async () => {
      let job: Job;
      try {
        job = await api.get<Job>(`/jobs/${jobId}`);
      } catch (err) {
        clearInterval(timer);
        reject(err);
        return;
      }
      onProgress?.(job);
      if (job.status === "done") {
        clearInterval(timer);
        resolve(job.result as T);
      } else if (job.status === "failed") {
        clearInterval(timer);
        reject(new ApiError(500, job.error?.code ?? "job_failed", job.error?.message ?? "job failed"));
      }
    };
    const timer = setInterval(tick, intervalMs);
    void tick();
  });
}
