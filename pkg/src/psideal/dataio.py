"""File formats: manifests, image stacks, surface exports, text reports.

Orientation convention: grid node (i, j) holds x-index i (left to right)
and y-index j (bottom to top), while image files put row 0 at the top, so
``image[row, col] == grid[col, ny - 1 - row]``.  All round-trip helpers
here apply that mapping consistently.

Reports are canonical text: identical inputs produce byte-identical
files, floats are written in shortest round-trip decimal form, and no
timestamps appear.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidFieldError, ManifestError, ShapeError
from .model import DataMatrix, GridSpec, LightSet, NormalAlbedoField, SurfaceGrid
from .screening import DatasetIndicators, IdealityReport

DEFAULT_WIDTH = 2.0


def fmt(x: float) -> str:
    """Shortest decimal form that round-trips to the same double."""
    return repr(float(x))


def yesno(flag: bool) -> str:
    return "yes" if flag else "no"


# ---------------------------------------------------------------------------
# image <-> grid orientation


def image_to_grid(img: np.ndarray) -> np.ndarray:
    """Map an image array (row 0 on top) to grid indexing (y upward)."""
    return np.asarray(img)[::-1, :].T


def grid_to_image(grid: np.ndarray) -> np.ndarray:
    """Inverse of :func:`image_to_grid`."""
    return np.asarray(grid).T[::-1, :]


def read_grayscale(path) -> np.ndarray:
    """Read an 8- or 16-bit PNG/PGM as floats in [0, 1].

    Color images are converted by luminance.
    """
    with Image.open(path) as img:
        if img.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(img, dtype=np.float64)
            scale = 65535.0
        else:
            if img.mode not in ("L", "LA"):
                img = img.convert("L")
            elif img.mode == "LA":
                img = img.convert("L")
            arr = np.asarray(img, dtype=np.float64)
            scale = 255.0
    return np.clip(arr / scale, 0.0, 1.0)


def write_gray16(path, values: np.ndarray) -> None:
    """Write a [0, 1] image array as 16-bit grayscale PNG."""
    arr = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    Image.fromarray(np.rint(arr * 65535.0).astype(np.uint16)).save(path)


def write_gray8(path, values: np.ndarray) -> None:
    arr = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    Image.fromarray(np.rint(arr * 255.0).astype(np.uint8), mode="L").save(path)


# ---------------------------------------------------------------------------
# manifests and datasets


@dataclass
class DatasetManifest:
    """Ordered image list plus optional calibration side-data."""

    name: str
    images: list[Path]
    width: float = DEFAULT_WIDTH
    lights_path: Path | None = None
    ground_truth_path: Path | None = None
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        if not self.images:
            raise ManifestError("manifest lists no images")
        if self.width <= 0 or not np.isfinite(self.width):
            raise ManifestError(f"manifest width must be positive, got {self.width}")

    @property
    def image_count(self) -> int:
        return len(self.images)

    def lights(self) -> LightSet | None:
        if self.lights_path is None:
            return None
        return load_lights(self.lights_path)

    def ground_truth(self) -> SurfaceGrid | None:
        if self.ground_truth_path is None:
            return None
        return load_heights_csv(self.ground_truth_path)


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(raw, dict) or "images" not in raw:
        raise ManifestError(f"manifest {path} needs an 'images' list")
    base = path.parent
    images = [base / p for p in raw["images"]]
    lights = raw.get("lights")
    truth = raw.get("ground_truth")
    return DatasetManifest(
        name=str(raw.get("name", path.parent.name or "dataset")),
        images=images,
        width=float(raw.get("width", DEFAULT_WIDTH)),
        lights_path=base / lights if lights else None,
        ground_truth_path=base / truth if truth else None,
        base_dir=base,
    )


def save_manifest(path, manifest: DatasetManifest) -> None:
    path = Path(path)
    base = path.parent

    def rel(p):
        return str(Path(p).relative_to(base)) if p is not None else None

    body = {
        "name": manifest.name,
        "width": manifest.width,
        "images": [rel(p) for p in manifest.images],
    }
    if manifest.lights_path is not None:
        body["lights"] = rel(manifest.lights_path)
    if manifest.ground_truth_path is not None:
        body["ground_truth"] = rel(manifest.ground_truth_path)
    path.write_text(json.dumps(body, indent=2) + "\n")


def load_dataset(manifest_path) -> tuple[DataMatrix, DatasetManifest]:
    """Read all manifest images into columns of a data matrix.

    Pixels are vectorized in grid order (x-major, y upward).  The grid
    spec is attached when the images are at least 3x3; smaller stacks
    still load for raw matrix work.
    """
    manifest = load_manifest(manifest_path)
    columns = []
    dims = None
    for img_path in manifest.images:
        if not Path(img_path).exists():
            raise FileNotFoundError(f"manifest references missing image: {img_path}")
        arr = read_grayscale(img_path)
        if dims is None:
            dims = arr.shape
        elif arr.shape != dims:
            raise ManifestError(
                f"image dimensions differ: {img_path} is {arr.shape}, expected {dims}"
            )
        columns.append(image_to_grid(arr).reshape(-1))
    ny, nx = dims
    spec = None
    if nx >= 3 and ny >= 3:
        spec = GridSpec.from_nodes(manifest.width, nx, ny)
    return DataMatrix(np.column_stack(columns), spec), manifest


def save_dataset_images(data: DataMatrix, spec: GridSpec, out_dir) -> list[Path]:
    """Write each column as a 16-bit PNG named img_XX.png; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in range(data.image_count):
        grid = data.values[:, t].reshape(spec.shape)
        path = out_dir / f"img_{t + 1:02d}.png"
        write_gray16(path, grid_to_image(grid))
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# lights


def save_lights(path, lights) -> None:
    directions = lights.directions if isinstance(lights, LightSet) else np.asarray(lights)
    lines = ["# light directions, one unit column per image: lx ly lz"]
    for col in directions.T:
        lines.append(" ".join(fmt(v) for v in col))
    Path(path).write_text("\n".join(lines) + "\n")


def load_lights(path) -> LightSet:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ManifestError(f"bad light line in {path}: {line!r}")
        rows.append([float(v) for v in parts])
    if not rows:
        raise ManifestError(f"no light directions found in {path}")
    return LightSet(np.array(rows).T)


# ---------------------------------------------------------------------------
# surfaces


def save_heights_csv(path, surface: SurfaceGrid) -> None:
    """Heights as CSV with a self-describing comment header.

    Values use shortest round-trip decimals, so save/load is bitwise
    exact.  Line k holds the ny values of x-index k, y ascending.
    """
    spec = surface.spec
    lines = [
        "# psideal heights",
        f"# width {fmt(spec.width)}",
        f"# shape {spec.nx} {spec.ny}",
    ]
    for row in surface.heights:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_heights_csv(path) -> SurfaceGrid:
    width = None
    shape = None
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts[:1] == ["width"]:
                width = float(parts[1])
            elif parts[:1] == ["shape"]:
                shape = (int(parts[1]), int(parts[2]))
            continue
        rows.append([float(v) for v in line.split(",")])
    if width is None or shape is None:
        raise ManifestError(f"heights file {path} lacks width/shape header")
    heights = np.array(rows)
    if heights.shape != shape:
        raise ManifestError(
            f"heights file {path} body {heights.shape} does not match header {shape}"
        )
    return SurfaceGrid(heights, GridSpec.from_nodes(width, *shape))


def _mesh_arrays(surface: SurfaceGrid):
    from .model import grid_coordinates

    spec = surface.spec
    x, y = grid_coordinates(spec)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    verts = np.column_stack(
        [xx.reshape(-1), yy.reshape(-1), surface.heights.reshape(-1)]
    )
    ny = spec.ny
    faces = []
    for i in range(spec.nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            c = (i + 1) * ny + j + 1
            d = i * ny + j + 1
            faces.append((a, b, c))
            faces.append((a, c, d))
    return verts, faces


def save_surface_obj(path, surface: SurfaceGrid) -> None:
    """Wavefront OBJ: one vertex per grid node, quads split to triangles."""
    verts, faces = _mesh_arrays(surface)
    lines = ["# psideal surface mesh"]
    for v in verts:
        lines.append(f"v {fmt(v[0])} {fmt(v[1])} {fmt(v[2])}")
    for a, b, c in faces:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_surface_ply(path, surface: SurfaceGrid) -> None:
    verts, faces = _mesh_arrays(surface)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(verts)}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    for v in verts:
        lines.append(f"{fmt(v[0])} {fmt(v[1])} {fmt(v[2])}")
    for a, b, c in faces:
        lines.append(f"3 {a} {b} {c}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_heightmap_png(path, surface: SurfaceGrid) -> None:
    """Min-max normalized 16-bit heightmap plus a JSON scale sidecar."""
    h = surface.heights
    lo, hi = float(h.min()), float(h.max())
    if hi > lo:
        normalized = (h - lo) / (hi - lo)
    else:
        normalized = np.zeros_like(h)
    write_gray16(path, grid_to_image(normalized))
    sidecar = {
        "min": lo,
        "max": hi,
        "width": surface.spec.width,
        "nx": surface.spec.nx,
        "ny": surface.spec.ny,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


SURFACE_FORMATS = ("obj", "ply", "png", "csv")


def export_surface(path, surface: SurfaceGrid, format: str) -> None:
    if format == "obj":
        save_surface_obj(path, surface)
    elif format == "ply":
        save_surface_ply(path, surface)
    elif format == "png":
        save_heightmap_png(path, surface)
    elif format == "csv":
        save_heights_csv(path, surface)
    else:
        raise InvalidFieldError(
            f"unknown surface format {format!r}; choose one of {', '.join(SURFACE_FORMATS)}"
        )


def export_normal_map(normals_path, albedo_path, field: NormalAlbedoField, spec: GridSpec) -> None:
    """RGB normal map (channel = (n+1)/2) and grayscale albedo image."""
    if field.pixel_count != spec.num_pixels:
        raise ShapeError(
            f"field has {field.pixel_count} pixels but grid {spec.shape} "
            f"needs {spec.num_pixels}"
        )
    encoded = np.rint((field.normals + 1.0) / 2.0 * 255.0).astype(np.uint8)
    channels = [grid_to_image(encoded[c].reshape(spec.shape)) for c in range(3)]
    rgb = np.stack(channels, axis=-1)
    Image.fromarray(rgb, mode="RGB").save(normals_path)
    albedo = field.albedo
    scale = max(1.0, float(albedo.max())) if albedo.size else 1.0
    write_gray8(albedo_path, grid_to_image((albedo / scale).reshape(spec.shape)))


def decode_normal_map(path) -> np.ndarray:
    """Inverse of the normal-map encoding (renormalized unit columns)."""
    rgb = np.asarray(Image.open(path), dtype=np.float64)
    grids = [image_to_grid(rgb[:, :, c]).reshape(-1) for c in range(3)]
    n = np.stack(grids) / 255.0 * 2.0 - 1.0
    return n / np.linalg.norm(n, axis=0)


# ---------------------------------------------------------------------------
# text reports


def render_indicators(ind: DatasetIndicators, indent: str = "  ") -> str:
    lines = [
        f"{indent}fourth_singular_value: {fmt(ind.fourth_singular_value)}",
        f"{indent}rank3_gap_ratio: {fmt(ind.rank3_gap_ratio)}",
        f"{indent}gram_min_eigenvalue: {fmt(ind.gram_min_eigenvalue)}",
        f"{indent}jacobian_rank_gap: {fmt(ind.jacobian_rank_gap)}",
        f"{indent}gram_degenerate: {yesno(ind.gram_degenerate)}",
        f"{indent}gn_converged: {yesno(ind.gn_converged)}",
    ]
    return "\n".join(lines)


def render_report(report: IdealityReport, image_count: int | None = None) -> str:
    """Canonical screening-report body (byte-stable, no timestamps)."""
    lines = [
        "psideal ideality report",
        f"method: {report.method}",
        f"breakdown: {yesno(report.breakdown)}",
    ]
    if image_count is not None:
        lines.append(f"images: {image_count}")
    if report.indicators is not None:
        lines.append("indicators:")
        lines.append(render_indicators(report.indicators))
    if report.error is not None:
        lines.append(f"error: {report.error}")
    lines.append("trace:")
    for round_number, (index, score) in enumerate(report.trace, start=1):
        lines.append(
            f"  round {round_number}: removed image {index} (score {fmt(score)})"
        )
    lines.append(f"restored: {report.restored if report.restored is not None else 'none'}")
    lines.append("kept: " + " ".join(str(k) for k in report.kept))
    return "\n".join(lines) + "\n"
