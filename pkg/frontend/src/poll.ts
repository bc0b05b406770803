import type { Job, WorkbenchApi } from "./api.js";

// Minute-scale jobs; half a second keeps the UI lively without hammering
// a laptop-local server.
export const POLL_INTERVAL_MS = 500;

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (job: Job) => void;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Poll a job until it settles (done or failed). The failed state is a
 * normal resolution here - callers inspect job.error - whereas network
 * or 404 errors reject.
 */
export async function pollJob(
  api: WorkbenchApi,
  jobId: string,
  options: PollOptions = {},
): Promise<Job> {
  const interval = options.intervalMs ?? POLL_INTERVAL_MS;
  const deadline =
    options.timeoutMs === undefined ? null : Date.now() + options.timeoutMs;
  for (;;) {
    const job = await api.getJob(jobId);
    options.onUpdate?.(job);
    if (job.state === "done" || job.state === "failed") return job;
    if (deadline !== null && Date.now() >= deadline) {
      throw new Error(`job ${jobId} still ${job.state} after timeout`);
    }
    await sleep(interval);
  }
}
