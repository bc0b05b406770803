import { describe, expect, it } from "vitest";

import {
  buildTerrainGeometry,
  heatColors,
  heightDifference,
  parseHeightsCsv,
  sameShape,
} from "../src/heights.js";

const SMALL_CSV = [
  "# psideal heights",
  "# width 2.0",
  "# shape 3 2",
  "0.0,0.1",
  "0.5,0.25",
  "1.0,-0.5",
  "",
].join("\n");

describe("parseHeightsCsv", () => {
  it("reads header and values", () => {
    const grid = parseHeightsCsv(SMALL_CSV);
    expect(grid.nx).toBe(3);
    expect(grid.ny).toBe(2);
    expect(grid.width).toBe(2.0);
    expect([...grid.heights]).toEqual([0.0, 0.1, 0.5, 0.25, 1.0, -0.5]);
  });

  it("keeps full double precision", () => {
    const value = 0.1234567890123456789;
    const text = `# psideal heights\n# width 1.0\n# shape 1 2\n${value},${value}\n`;
    const grid = parseHeightsCsv(text);
    expect(grid.heights[0]).toBe(value);
  });

  it("rejects malformed files", () => {
    expect(() => parseHeightsCsv("1,2\n3,4\n")).toThrow(/header/);
    expect(() =>
      parseHeightsCsv("# psideal heights\n# width 2.0\n# shape 3 2\n0,1\n"),
    ).toThrow(/rows/);
    expect(() =>
      parseHeightsCsv("# psideal heights\n# width 2.0\n# shape 1 2\n0,oops\n"),
    ).toThrow(/non-finite/);
  });
});

describe("buildTerrainGeometry", () => {
  it("produces one vertex per node and two triangles per cell", () => {
    const geometry = buildTerrainGeometry(parseHeightsCsv(SMALL_CSV));
    expect(geometry.positions).toHaveLength(3 * 2 * 3);
    expect(geometry.indices).toHaveLength((3 - 1) * (2 - 1) * 6);
    // node (0,0): x=-1, y=-0.5 (height-extent is h*(ny-1)=1), z=heights[0]
    expect([...geometry.positions.slice(0, 3)]).toEqual([-1, -0.5, 0]);
    // node (2,1): x=+1, y=+0.5, z=-0.5
    const last = geometry.positions.slice(5 * 3, 6 * 3);
    expect([...last]).toEqual([1, 0.5, -0.5]);
    // all indices in range
    for (const index of geometry.indices) {
      expect(index).toBeGreaterThanOrEqual(0);
      expect(index).toBeLessThan(6);
    }
  });

  it("covers every cell with consistent winding", () => {
    const grid = parseHeightsCsv(SMALL_CSV);
    const geometry = buildTerrainGeometry(grid);
    const triangles: number[][] = [];
    for (let t = 0; t < geometry.indices.length; t += 3) {
      triangles.push([...geometry.indices.slice(t, t + 3)]);
    }
    expect(triangles).toEqual([
      [0, 2, 3],
      [0, 3, 1],
      [2, 4, 5],
      [2, 5, 3],
    ]);
  });
});

describe("difference overlay helpers", () => {
  it("compares shapes and subtracts", () => {
    const a = parseHeightsCsv(SMALL_CSV);
    const b = parseHeightsCsv(SMALL_CSV.replace("1.0,-0.5", "0.8,-0.1"));
    expect(sameShape(a, b)).toBe(true);
    const diff = heightDifference(a, b);
    expect([...diff]).toEqual([0, 0, 0, 0, 0.19999999999999996, 0.4]);
    const other = parseHeightsCsv(
      "# psideal heights\n# width 2.0\n# shape 2 2\n0,0\n0,0\n",
    );
    expect(sameShape(a, other)).toBe(false);
    expect(() => heightDifference(a, other)).toThrow(/shapes/);
  });

  it("colors identical surfaces uniformly cold", () => {
    const zeros = new Float64Array(4);
    const colors = heatColors(zeros);
    for (let k = 0; k < 4; k++) {
      expect(colors[3 * k]).toBe(0); // no red anywhere
      expect(colors[3 * k + 2]).toBe(1);
    }
    const ramp = heatColors(new Float64Array([0, 1, 2]));
    expect(ramp[0]).toBe(0);
    expect(ramp[6]).toBe(1); // hottest node fully red
    expect(ramp[8]).toBe(0);
  });
});
