import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { Job, WorkbenchApi } from "../src/api.js";
import { POLL_INTERVAL_MS, pollJob } from "../src/poll.js";

function jobIn(state: Job["state"]): Job {
  return {
    id: "4",
    kind: "screen",
    params: { method: "algo1", kept: [1, 2, 3, 4, 5, 6] },
    state,
    timing: { created: 0, started: null, finished: null },
    result: null,
    error: state === "failed" ? { message: "boom" } : null,
  };
}

function apiReturning(states: Job["state"][]): WorkbenchApi {
  let call = 0;
  return {
    getJob: async () => jobIn(states[Math.min(call++, states.length - 1)]),
  } as unknown as WorkbenchApi;
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("pollJob", () => {
  it("polls at the default 500 ms cadence until done", async () => {
    const api = apiReturning(["queued", "running", "running", "done"]);
    const seen: string[] = [];
    const promise = pollJob(api, "4", { onUpdate: (job) => seen.push(job.state) });
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS * 3);
    const job = await promise;
    expect(job.state).toBe("done");
    expect(seen).toEqual(["queued", "running", "running", "done"]);
  });

  it("resolves failed jobs normally so callers can show diagnostics", async () => {
    const api = apiReturning(["running", "failed"]);
    const promise = pollJob(api, "4");
    await vi.advanceTimersByTimeAsync(POLL_INTERVAL_MS);
    const job = await promise;
    expect(job.state).toBe("failed");
    expect(job.error?.message).toBe("boom");
  });

  it("honours a timeout", async () => {
    const api = apiReturning(["running"]);
    const promise = pollJob(api, "4", { intervalMs: 100, timeoutMs: 350 });
    const outcome = expect(promise).rejects.toThrow(/timeout/);
    await vi.advanceTimersByTimeAsync(1000);
    await outcome;
  });
});
