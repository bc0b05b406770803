import type { Job } from "./api.js";
import { sameShape, type TerrainGrid } from "./heights.js";

export type SlotStatus = "empty" | "pending" | "failed" | "ready";

export interface SlotView {
  status: SlotStatus;
  label: string;
  job: Job | null;
  grid: TerrainGrid | null;
}

const EMPTY: SlotView = { status: "empty", label: "no reconstruction", job: null, grid: null };

function describe(job: Job): string {
  const method = job.params.method;
  const kept = job.params.kept.length;
  let label = `${method}, ${kept} images`;
  const e = job.result?.relative_error_inf;
  if (e !== undefined) label += `, E=${e}`;
  return label;
}

function describeFailure(job: Job): string {
  if (!job.error) return "failed";
  let label = `failed: ${job.error.message}`;
  if (job.error.min_eigenvalue !== undefined) {
    label += ` (eigenvalue ${job.error.min_eigenvalue})`;
  }
  return label;
}

/**
 * Pure twin of the 3D compare view: tracks what each slot holds and
 * whether the difference overlay is currently possible. The rendering
 * layer just reflects this.
 */
export class CompareModel {
  readonly slots: [SlotView, SlotView] = [EMPTY, EMPTY];

  setPending(which: 0 | 1, job: Job): void {
    this.slots[which] = {
      status: "pending",
      label: `running ${job.params.method}...`,
      job,
      grid: null,
    };
  }

  setFailed(which: 0 | 1, job: Job): void {
    this.slots[which] = { status: "failed", label: describeFailure(job), job, grid: null };
  }

  setReady(which: 0 | 1, job: Job, grid: TerrainGrid): void {
    this.slots[which] = { status: "ready", label: describe(job), job, grid };
  }

  clear(which: 0 | 1): void {
    this.slots[which] = EMPTY;
  }

  bothReady(): boolean {
    return this.slots[0].status === "ready" && this.slots[1].status === "ready";
  }

  differenceGate(): { ok: boolean; message: string | null } {
    if (!this.bothReady()) {
      return { ok: false, message: "need two completed reconstructions" };
    }
    const a = this.slots[0].grid as TerrainGrid;
    const b = this.slots[1].grid as TerrainGrid;
    if (!sameShape(a, b)) {
      return { ok: false, message: "comparison disabled: grids do not match" };
    }
    return { ok: true, message: null };
  }
}
