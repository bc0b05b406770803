import json

import numpy as np
import pytest
from PIL import Image

from psideal.dataio import (
    decode_normal_map,
    export_normal_map,
    export_surface,
    fmt,
    grid_to_image,
    image_to_grid,
    load_dataset,
    load_heights_csv,
    load_lights,
    load_manifest,
    read_grayscale,
    render_report,
    save_dataset_images,
    save_heights_csv,
    save_lights,
    save_manifest,
    save_surface_obj,
    write_gray16,
    DatasetManifest,
)
from psideal.errors import ManifestError
from psideal.model import (
    DataMatrix,
    GridSpec,
    LightSet,
    NormalAlbedoField,
    SurfaceGrid,
)
from psideal.screening import screen_linear
from psideal.synth import SyntheticScenario, default_nine_lights, generate_dataset


def test_image_grid_orientation():
    img = np.arange(12, dtype=float).reshape(3, 4)  # 3 rows, 4 cols
    grid = image_to_grid(img)
    assert grid.shape == (4, 3)  # nx=4, ny=3
    # top-left image pixel is (x=0, y=max)
    assert grid[0, 2] == img[0, 0]
    # bottom-right image pixel is (x=max, y=0)
    assert grid[3, 0] == img[2, 3]
    assert np.array_equal(grid_to_image(grid), img)


def test_gray16_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.random((9, 7))
    path = tmp_path / "x.png"
    write_gray16(path, values)
    back = read_grayscale(path)
    assert back.shape == (9, 7)
    assert np.max(np.abs(back - values)) <= 1.0 / 65535.0


def test_read_grayscale_color_uses_luminance(tmp_path):
    rgb = np.zeros((4, 4, 3), dtype=np.uint8)
    rgb[:, :, 1] = 255  # pure green
    path = tmp_path / "c.png"
    Image.fromarray(rgb, mode="RGB").save(path)
    arr = read_grayscale(path)
    assert 0.5 < arr[0, 0] < 0.7  # green-dominant luminance, not 1.0


def write_dataset(tmp_path, values, spec, **manifest_extra):
    paths = save_dataset_images(DataMatrix(values, spec), spec, tmp_path)
    manifest = DatasetManifest(
        name="t", images=paths, width=spec.width, **manifest_extra
    )
    mpath = tmp_path / "manifest.json"
    save_manifest(mpath, manifest)
    return mpath


def test_load_dataset_roundtrip(tmp_path):
    spec = GridSpec(2.0, 8, 6)
    rng = np.random.default_rng(1)
    values = rng.random((spec.num_pixels, 5))
    mpath = write_dataset(tmp_path, values, spec)
    data, manifest = load_dataset(mpath)
    assert data.image_count == 5
    assert data.spec == spec
    assert manifest.image_count == 5
    assert np.max(np.abs(data.values - values)) <= 1.0 / 65535.0


def test_load_dataset_tiny_white_image(tmp_path):
    img = np.full((2, 2), 255, dtype=np.uint8)
    path = tmp_path / "white.png"
    Image.fromarray(img, mode="L").save(path)
    (tmp_path / "manifest.json").write_text(json.dumps({"images": ["white.png"]}))
    data, _ = load_dataset(tmp_path / "manifest.json")
    assert data.spec is None  # too small to carry a grid
    assert np.array_equal(data.values, np.ones((4, 1)))


def test_load_dataset_q20_contract(tmp_path):
    spec = GridSpec(2.0, 20, 24)
    rng = np.random.default_rng(2)
    values = rng.random((spec.num_pixels, 20))
    mpath = write_dataset(tmp_path, values, spec)
    data, _ = load_dataset(mpath)
    assert data.values.shape == (spec.num_pixels, 20)


def test_load_dataset_errors(tmp_path):
    (tmp_path / "manifest.json").write_text(json.dumps({"images": ["gone.png"]}))
    with pytest.raises(FileNotFoundError) as info:
        load_dataset(tmp_path / "manifest.json")
    assert "gone.png" in str(info.value)

    Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="L").save(tmp_path / "a.png")
    Image.fromarray(np.zeros((5, 4), dtype=np.uint8), mode="L").save(tmp_path / "b.png")
    (tmp_path / "manifest.json").write_text(
        json.dumps({"images": ["a.png", "b.png"]})
    )
    with pytest.raises(ManifestError):
        load_dataset(tmp_path / "manifest.json")

    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "nonexistent.json")
    (tmp_path / "empty.json").write_text(json.dumps({"images": []}))
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "empty.json")


def test_lights_roundtrip(tmp_path):
    lights = default_nine_lights()
    path = tmp_path / "lights.txt"
    save_lights(path, lights)
    back = load_lights(path)
    assert np.array_equal(back.directions, lights.directions)
    (tmp_path / "bad.txt").write_text("1 2\n")
    with pytest.raises(ManifestError):
        load_lights(tmp_path / "bad.txt")


def test_heights_csv_bitwise_roundtrip(tmp_path):
    spec = GridSpec(1.7, 6, 9)
    rng = np.random.default_rng(3)
    surface = SurfaceGrid(rng.normal(size=spec.shape) * 1e-3, spec)
    path = tmp_path / "h.csv"
    save_heights_csv(path, surface)
    back = load_heights_csv(path)
    assert back.spec == spec
    assert np.array_equal(back.heights, surface.heights)


def test_obj_export_counts(tmp_path):
    spec = GridSpec(1.0, 1, 1)  # 3x3 nodes
    path = tmp_path / "s.obj"
    save_surface_obj(path, SurfaceGrid(np.zeros(spec.shape), spec))
    text = path.read_text().splitlines()
    assert sum(1 for line in text if line.startswith("v ")) == 9
    assert sum(1 for line in text if line.startswith("f ")) == 8

    spec = GridSpec(2.0, 99, 99)
    path = tmp_path / "big.obj"
    save_surface_obj(path, SurfaceGrid(np.zeros(spec.shape), spec))
    text = path.read_text().splitlines()
    assert sum(1 for line in text if line.startswith("v ")) == 10201
    assert sum(1 for line in text if line.startswith("f ")) == 2 * 100 * 100


def test_ply_export_structure(tmp_path):
    spec = GridSpec(1.0, 2, 3)
    path = tmp_path / "s.ply"
    export_surface(path, SurfaceGrid(np.zeros(spec.shape), spec), "ply")
    lines = path.read_text().splitlines()
    assert lines[0] == "ply"
    assert f"element vertex {spec.num_pixels}" in lines
    assert f"element face {2 * (spec.nx - 1) * (spec.ny - 1)}" in lines


def test_heightmap_png_with_sidecar(tmp_path):
    spec = GridSpec(2.0, 10, 10)
    rng = np.random.default_rng(4)
    surface = SurfaceGrid(rng.normal(size=spec.shape), spec)
    path = tmp_path / "h.png"
    export_surface(path, surface, "png")
    meta = json.loads((tmp_path / "h.png.json").read_text())
    assert meta["nx"] == spec.nx and meta["ny"] == spec.ny
    img = read_grayscale(path)
    recon = image_to_grid(img) * (meta["max"] - meta["min"]) + meta["min"]
    span = meta["max"] - meta["min"]
    assert np.max(np.abs(recon - surface.heights)) <= span / 65535.0


def test_normal_map_encoding(tmp_path):
    spec = GridSpec(1.0, 1, 1)
    n = np.zeros((3, 9))
    n[2] = 1.0
    n[:, 3] = [1.0, 0.0, 0.0]
    field = NormalAlbedoField(n, np.full(9, 0.5))
    npath, apath = tmp_path / "n.png", tmp_path / "a.png"
    export_normal_map(npath, apath, field, spec)
    rgb = np.asarray(Image.open(npath))
    flat_rgb = np.stack([image_to_grid(rgb[:, :, c]).reshape(-1) for c in range(3)])
    assert tuple(flat_rgb[:, 0]) == (128, 128, 255)
    assert tuple(flat_rgb[:, 3]) == (255, 128, 128)
    albedo = np.asarray(Image.open(apath))
    assert np.all(albedo == 128)


def test_normal_map_decode_angle_error(tmp_path):
    rng = np.random.default_rng(5)
    spec = GridSpec(1.0, 8, 8)
    n = rng.normal(size=(3, spec.num_pixels))
    n /= np.linalg.norm(n, axis=0)
    field = NormalAlbedoField(n, np.ones(spec.num_pixels))
    export_normal_map(tmp_path / "n.png", tmp_path / "a.png", field, spec)
    decoded = decode_normal_map(tmp_path / "n.png")
    cosines = np.clip(np.sum(decoded * n, axis=0), -1.0, 1.0)
    assert np.max(np.degrees(np.arccos(cosines))) < 1.0


def test_render_report_stable_and_full_precision():
    spec = GridSpec(2.0, 39, 39)
    ds = generate_dataset(
        SyntheticScenario(
            spec=spec,
            surface="gaussian_bump",
            surface_params={"amplitude": 0.35, "width": 0.4},
            albedo="two_tone",
        )
    )
    report = screen_linear(ds.data)
    text_a = render_report(report, ds.data.image_count)
    text_b = render_report(screen_linear(ds.data), ds.data.image_count)
    assert text_a == text_b
    assert "psideal ideality report" in text_a
    assert "method: algo1" in text_a
    # scores round-trip exactly through the decimal form
    for (_, score), line in zip(
        report.trace, [l for l in text_a.splitlines() if "removed image" in l]
    ):
        printed = line.split("score ")[1].rstrip(")")
        assert float(printed) == score
    assert fmt(1.0 / 3.0) == repr(1.0 / 3.0)
