// heights.csv parsing and mesh-array building. Pure typed-array code,
// no three.js import, so everything in this file runs under node tests.
//
// File layout (written by the server):
//   # psideal heights
//   # width <physical width>
//   # shape <nx> <ny>
//   <nx lines of ny comma-separated heights, y ascending within a line>

export interface TerrainGrid {
  nx: number;
  ny: number;
  width: number;
  /** row-major over x then y: heights[i * ny + j] */
  heights: Float64Array;
}

export function parseHeightsCsv(text: string): TerrainGrid {
  let width: number | null = null;
  let nx = 0;
  let ny = 0;
  const rows: number[][] = [];
  for (const rawLine of text.split("\n")) {
    const line = rawLine.trim();
    if (line === "") continue;
    if (line.startsWith("#")) {
      const parts = line.slice(1).trim().split(/\s+/);
      if (parts[0] === "width") width = Number(parts[1]);
      if (parts[0] === "shape") {
        nx = Number(parts[1]);
        ny = Number(parts[2]);
      }
      continue;
    }
    rows.push(line.split(",").map(Number));
  }
  if (width === null || !nx || !ny) {
    throw new Error("heights file lacks width/shape header");
  }
  if (rows.length !== nx) {
    throw new Error(`expected ${nx} rows, found ${rows.length}`);
  }
  const heights = new Float64Array(nx * ny);
  rows.forEach((row, i) => {
    if (row.length !== ny) {
      throw new Error(`row ${i} has ${row.length} values, expected ${ny}`);
    }
    for (let j = 0; j < ny; j++) {
      const v = row[j];
      if (!Number.isFinite(v)) throw new Error(`non-finite height at ${i},${j}`);
      heights[i * ny + j] = v;
    }
  });
  return { nx, ny, width, heights };
}

export interface TerrainGeometry {
  /** xyz per node, x right / y up in grid coordinates, z = height */
  positions: Float32Array;
  indices: Uint32Array;
  nx: number;
  ny: number;
}

/**
 * Flat mesh arrays for a height grid: one vertex per node centered on
 * the origin, two triangles per cell. Ready for a three.js
 * BufferGeometry, but just arrays here.
 */
export function buildTerrainGeometry(grid: TerrainGrid): TerrainGeometry {
  const { nx, ny, width, heights } = grid;
  const h = width / (nx - 1);
  const height = h * (ny - 1);
  const positions = new Float32Array(nx * ny * 3);
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < ny; j++) {
      const k = i * ny + j;
      positions[3 * k] = -width / 2 + i * h;
      positions[3 * k + 1] = -height / 2 + j * h;
      positions[3 * k + 2] = heights[k];
    }
  }
  const indices = new Uint32Array((nx - 1) * (ny - 1) * 6);
  let cursor = 0;
  for (let i = 0; i < nx - 1; i++) {
    for (let j = 0; j < ny - 1; j++) {
      const a = i * ny + j;
      const b = (i + 1) * ny + j;
      const c = (i + 1) * ny + j + 1;
      const d = i * ny + j + 1;
      indices[cursor++] = a;
      indices[cursor++] = b;
      indices[cursor++] = c;
      indices[cursor++] = a;
      indices[cursor++] = c;
      indices[cursor++] = d;
    }
  }
  return { positions, indices, nx, ny };
}

export function sameShape(a: TerrainGrid, b: TerrainGrid): boolean {
  return a.nx === b.nx && a.ny === b.ny && a.width === b.width;
}

/** Per-node |a - b|; shapes must match (check with sameShape first). */
export function heightDifference(a: TerrainGrid, b: TerrainGrid): Float64Array {
  if (!sameShape(a, b)) throw new Error("grids have different shapes");
  const out = new Float64Array(a.heights.length);
  for (let k = 0; k < out.length; k++) {
    out[k] = Math.abs(a.heights[k] - b.heights[k]);
  }
  return out;
}

/**
 * Map nonnegative values onto a cold-to-hot vertex-color ramp; all-zero
 * input comes out uniformly cold, which makes "no difference" obvious.
 */
export function heatColors(values: Float64Array): Float32Array {
  let max = 0;
  for (const v of values) if (v > max) max = v;
  const colors = new Float32Array(values.length * 3);
  for (let k = 0; k < values.length; k++) {
    const t = max > 0 ? values[k] / max : 0;
    colors[3 * k] = t; // red rises with the difference
    colors[3 * k + 1] = 0.2;
    colors[3 * k + 2] = 1 - t;
  }
  return colors;
}
