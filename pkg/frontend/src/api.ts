// Thin typed client for the curation service. Every shape here mirrors
// the server's JSON verbatim; the UI never recomputes any number it
// can fetch.

export interface DatasetImage {
  id: number;
  name: string;
  thumb: string;
}

export interface DatasetSummary {
  name: string;
  image_count: number;
  width: number;
  image_size: [number, number];
  grid: { interior_x: number; interior_y: number; spacing: number } | null;
  has_lights: boolean;
  has_ground_truth: boolean;
  images: DatasetImage[];
}

export interface IndicatorValues {
  fourth_singular_value: number;
  rank3_gap_ratio: number;
  gram_min_eigenvalue: number;
  jacobian_rank_gap: number;
  gram_degenerate: boolean;
  gn_converged: boolean;
  breakdown: boolean;
}

/** One screening run; indices are 1-based manifest positions. */
export interface ScreenReport {
  method: string;
  indicators: IndicatorValues | null;
  trace: [number, number][];
  removed: number[];
  restored: number | null;
  kept: number[];
  breakdown: boolean;
  error: string | null;
}

export type JobKind = "screen" | "reconstruct" | "indicators";
export type JobState = "queued" | "running" | "done" | "failed";

export interface JobRequest {
  kind: JobKind;
  method?: string;
  kept?: number[];
}

export interface JobResult {
  kind: JobKind;
  method: string;
  kept: number[];
  reports?: ScreenReport[];
  indicators?: IndicatorValues;
  gram_min_eigenvalue?: number;
  gn_converged?: boolean;
  gn_iterations?: number;
  relative_error_inf?: number;
  artifacts?: Record<string, string>;
}

export interface JobError {
  message: string;
  min_eigenvalue?: number;
  best_eigenvalue?: number;
}

export interface Job {
  id: string;
  kind: JobKind;
  params: { method: string; kept: number[] };
  state: JobState;
  timing: { created: number; started: number | null; finished: number | null };
  result: JobResult | null;
  error: JobError | null;
  cached?: boolean;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") message = body.detail;
    else if (body) message = JSON.stringify(body);
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(response.status, message);
}

export class WorkbenchApi {
  constructor(readonly baseUrl: string = "") {}

  url(path: string): string {
    return this.baseUrl + path;
  }

  async fetchDataset(): Promise<DatasetSummary> {
    const response = await fetch(this.url("/dataset"));
    await raiseForStatus(response);
    return (await response.json()) as DatasetSummary;
  }

  thumbUrl(imageId: number): string {
    return this.url(`/thumb/${imageId}`);
  }

  async submitJob(request: JobRequest): Promise<Job> {
    const response = await fetch(this.url("/jobs"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    await raiseForStatus(response);
    return (await response.json()) as Job;
  }

  async getJob(jobId: string): Promise<Job> {
    const response = await fetch(this.url(`/jobs/${jobId}`));
    await raiseForStatus(response);
    return (await response.json()) as Job;
  }

  artifactUrl(jobId: string, name: string): string {
    return this.url(`/artifacts/${jobId}/${name}`);
  }

  async fetchArtifactText(jobId: string, name: string): Promise<string> {
    const response = await fetch(this.artifactUrl(jobId, name));
    await raiseForStatus(response);
    return await response.text();
  }
}
