import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, WorkbenchApi, type DatasetSummary } from "../src/api.js";

const NINE_IMAGE_DATASET: DatasetSummary = {
  name: "demo",
  image_count: 9,
  width: 2.0,
  image_size: [41, 41],
  grid: { interior_x: 39, interior_y: 39, spacing: 0.05 },
  has_lights: true,
  has_ground_truth: true,
  images: Array.from({ length: 9 }, (_, k) => ({
    id: k + 1,
    name: `img_0${k + 1}.png`,
    thumb: `/thumb/${k + 1}`,
  })),
};

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("WorkbenchApi", () => {
  it("lists nine thumbnails for a nine-image manifest", async () => {
    const fetchMock = vi.fn(async () => jsonResponse(NINE_IMAGE_DATASET));
    vi.stubGlobal("fetch", fetchMock);
    const api = new WorkbenchApi("http://svc");
    const dataset = await api.fetchDataset();
    expect(fetchMock).toHaveBeenCalledWith("http://svc/dataset");
    expect(dataset.images).toHaveLength(9);
    const thumbs = dataset.images.map((image) => api.thumbUrl(image.id));
    expect(thumbs).toHaveLength(9);
    expect(thumbs[0]).toBe("http://svc/thumb/1");
    expect(thumbs[8]).toBe("http://svc/thumb/9");
  });

  it("submits jobs as JSON and returns the job body", async () => {
    const fetchMock = vi.fn(async (_url: string, init?: RequestInit) => {
      expect(init?.method).toBe("POST");
      expect(JSON.parse(init?.body as string)).toEqual({
        kind: "screen",
        method: "algo1",
        kept: [1, 2, 4, 5, 6, 7, 8, 9],
      });
      return jsonResponse({ id: "1", state: "queued" });
    });
    vi.stubGlobal("fetch", fetchMock);
    const api = new WorkbenchApi("http://svc");
    const job = await api.submitJob({
      kind: "screen",
      method: "algo1",
      kept: [1, 2, 4, 5, 6, 7, 8, 9],
    });
    expect(job.id).toBe("1");
  });

  it("surfaces the server's validation message", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        jsonResponse(
          { detail: "estimation needs at least six images, got 5 kept" },
          422,
        ),
      ),
    );
    const api = new WorkbenchApi();
    await expect(
      api.submitJob({ kind: "screen", kept: [1, 2, 3, 4, 5] }),
    ).rejects.toMatchObject({
      name: "ApiError",
      status: 422,
      message: expect.stringContaining("at least six images"),
    });
  });

  it("builds artifact urls and fetches their text", async () => {
    const api = new WorkbenchApi("http://svc");
    expect(api.artifactUrl("7", "heights.csv")).toBe(
      "http://svc/artifacts/7/heights.csv",
    );
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response("# psideal heights\n", { status: 200 })),
    );
    await expect(api.fetchArtifactText("7", "report")).resolves.toContain(
      "psideal",
    );
  });

  it("keeps the status line when the error body is not json", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response("boom", { status: 500, statusText: "Server Error" })),
    );
    const api = new WorkbenchApi();
    await expect(api.fetchDataset()).rejects.toThrow(ApiError);
    await expect(api.fetchDataset()).rejects.toThrow(/500/);
  });
});
