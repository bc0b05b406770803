import { describe, expect, it } from "vitest";

import type { Job } from "../src/api.js";
import { CompareModel } from "../src/compare_model.js";
import { parseHeightsCsv } from "../src/heights.js";

const GRID_A = parseHeightsCsv(
  "# psideal heights\n# width 2.0\n# shape 2 2\n0,0.1\n0.2,0.3\n",
);
const GRID_B = parseHeightsCsv(
  "# psideal heights\n# width 2.0\n# shape 2 2\n0,0\n0,0\n",
);
const GRID_OTHER = parseHeightsCsv(
  "# psideal heights\n# width 2.0\n# shape 3 2\n0,0\n0,0\n0,0\n",
);

function doneJob(method: string, e?: number): Job {
  return {
    id: "9",
    kind: "reconstruct",
    params: { method, kept: [1, 2, 3, 4, 5, 6, 7, 8] },
    state: "done",
    timing: { created: 0, started: 1, finished: 2 },
    result: {
      kind: "reconstruct",
      method,
      kept: [1, 2, 3, 4, 5, 6, 7, 8],
      relative_error_inf: e,
      artifacts: { "heights.csv": "/artifacts/9/heights.csv" },
    },
    error: null,
  };
}

function failedJob(): Job {
  return {
    ...doneJob("linear"),
    state: "failed",
    result: null,
    error: {
      message: "gram matrix is not positive definite",
      min_eigenvalue: -0.57,
    },
  };
}

describe("CompareModel", () => {
  it("renders two completed reconstructions side by side", () => {
    const model = new CompareModel();
    model.setReady(0, doneJob("linear", 0.501), GRID_A);
    model.setReady(1, doneJob("linear", 0.0004), GRID_B);
    expect(model.bothReady()).toBe(true);
    expect(model.slots[0].label).toContain("linear, 8 images");
    expect(model.slots[0].label).toContain("E=0.501");
    expect(model.differenceGate()).toEqual({ ok: true, message: null });
  });

  it("stays disabled until both slots are ready", () => {
    const model = new CompareModel();
    expect(model.differenceGate().ok).toBe(false);
    model.setReady(0, doneJob("linear"), GRID_A);
    const gate = model.differenceGate();
    expect(gate.ok).toBe(false);
    expect(gate.message).toContain("two completed reconstructions");
  });

  it("disables comparison for mismatched grids with a message", () => {
    const model = new CompareModel();
    model.setReady(0, doneJob("linear"), GRID_A);
    model.setReady(1, doneJob("nonlinear"), GRID_OTHER);
    const gate = model.differenceGate();
    expect(gate.ok).toBe(false);
    expect(gate.message).toContain("grids do not match");
  });

  it("shows the failure diagnostic, eigenvalue included", () => {
    const model = new CompareModel();
    model.setFailed(1, failedJob());
    const slot = model.slots[1];
    expect(slot.status).toBe("failed");
    expect(slot.label).toContain("not positive definite");
    expect(slot.label).toContain("-0.57");
    expect(model.differenceGate().ok).toBe(false);
  });

  it("clears back to the empty placeholder", () => {
    const model = new CompareModel();
    model.setReady(0, doneJob("linear"), GRID_A);
    model.clear(0);
    expect(model.slots[0].status).toBe("empty");
    expect(model.slots[0].label).toBe("no reconstruction");
  });
});
