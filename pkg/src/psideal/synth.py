"""Synthetic photometric-stereo datasets with known ground truth.

A scenario picks an analytic surface, an albedo texture, a set of lights,
and an optional list of per-image corruptions (near-light substitution
and/or additive Gaussian noise).  Everything is deterministic given the
scenario seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpecError, UnknownSurfaceError
from .model import (
    DataMatrix,
    GridSpec,
    LightSet,
    NormalAlbedoField,
    SurfaceGrid,
    field_from_gradient,
    grid_coordinates,
    render_lambertian,
)

SURFACE_NAMES = ("plane", "gaussian_bump", "two_bumps", "sinusoid")
ALBEDO_NAMES = ("constant", "two_tone")

# default texture levels for the two-tone block pattern
TWO_TONE_LEVELS = (1.0, 0.55)


def surface_functions(name: str, params: dict | None = None):
    """Closed-form height and gradient callables for a named surface.

    Returns ``(u, ux, uy)``, each mapping coordinate arrays ``(x, y)`` to
    values of the same shape.
    """
    params = dict(params or {})

    def take(key, default):
        return float(params.pop(key, default))

    if name == "plane":
        sx = take("slope_x", 0.0)
        sy = take("slope_y", 0.0)
        c = take("offset", 0.0)
        funcs = (
            lambda x, y: sx * x + sy * y + c + 0.0 * x,
            lambda x, y: np.full(np.broadcast(x, y).shape, sx),
            lambda x, y: np.full(np.broadcast(x, y).shape, sy),
        )
    elif name == "gaussian_bump":
        a = take("amplitude", 0.35)
        w = take("width", 0.4)
        cx = take("center_x", 0.0)
        cy = take("center_y", 0.0)

        def bump(x, y):
            return a * np.exp(-(((x - cx) ** 2) + (y - cy) ** 2) / (2.0 * w**2))

        funcs = (
            bump,
            lambda x, y: -(x - cx) / w**2 * bump(x, y),
            lambda x, y: -(y - cy) / w**2 * bump(x, y),
        )
    elif name == "two_bumps":
        a1 = take("amplitude_1", 0.3)
        a2 = take("amplitude_2", 0.2)
        w1 = take("width_1", 0.3)
        w2 = take("width_2", 0.25)
        x1 = take("center_1_x", -0.4)
        y1 = take("center_1_y", -0.3)
        x2 = take("center_2_x", 0.4)
        y2 = take("center_2_y", 0.35)

        def g1(x, y):
            return a1 * np.exp(-(((x - x1) ** 2) + (y - y1) ** 2) / (2.0 * w1**2))

        def g2(x, y):
            return a2 * np.exp(-(((x - x2) ** 2) + (y - y2) ** 2) / (2.0 * w2**2))

        funcs = (
            lambda x, y: g1(x, y) + g2(x, y),
            lambda x, y: -(x - x1) / w1**2 * g1(x, y) - (x - x2) / w2**2 * g2(x, y),
            lambda x, y: -(y - y1) / w1**2 * g1(x, y) - (y - y2) / w2**2 * g2(x, y),
        )
    elif name == "sinusoid":
        a = take("amplitude", 0.1)
        kx = take("freq_x", np.pi)
        ky = take("freq_y", np.pi)
        funcs = (
            lambda x, y: a * np.sin(kx * x) * np.cos(ky * y),
            lambda x, y: a * kx * np.cos(kx * x) * np.cos(ky * y),
            lambda x, y: -a * ky * np.sin(kx * x) * np.sin(ky * y),
        )
    else:
        raise UnknownSurfaceError(
            f"unknown surface {name!r}; choose one of {', '.join(SURFACE_NAMES)}"
        )
    if params:
        raise InvalidSpecError(
            f"unknown parameters for surface {name!r}: {sorted(params)}"
        )
    return funcs


def builtin_surface(name: str, params: dict | None, spec: GridSpec) -> SurfaceGrid:
    """Sample a named analytic surface at the grid nodes."""
    u, _, _ = surface_functions(name, params)
    x, y = grid_coordinates(spec)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return SurfaceGrid(u(xx, yy), spec)


def surface_gradient(name: str, params: dict | None, spec: GridSpec):
    """Analytic partial derivatives sampled at the grid nodes."""
    _, ux, uy = surface_functions(name, params)
    x, y = grid_coordinates(spec)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return ux(xx, yy), uy(xx, yy)


def albedo_pattern(name: str, params: dict | None, spec: GridSpec) -> np.ndarray:
    """Per-pixel albedo for a named texture, in pixel order."""
    params = dict(params or {})
    if name == "constant":
        value = float(params.pop("value", 1.0))
        out = np.full(spec.num_pixels, value)
    elif name == "two_tone":
        blocks = int(params.pop("blocks", 4))
        if blocks < 1:
            raise InvalidSpecError(f"two_tone needs at least 1 block, got {blocks}")
        hi, lo = TWO_TONE_LEVELS
        bx = max(1, -(-spec.nx // blocks))
        by = max(1, -(-spec.ny // blocks))
        ii, jj = np.meshgrid(np.arange(spec.nx), np.arange(spec.ny), indexing="ij")
        checker = (ii // bx + jj // by) % 2 == 0
        out = np.where(checker, hi, lo).reshape(-1)
    else:
        raise UnknownSurfaceError(
            f"unknown albedo pattern {name!r}; choose one of {', '.join(ALBEDO_NAMES)}"
        )
    if params:
        raise InvalidSpecError(
            f"unknown parameters for albedo {name!r}: {sorted(params)}"
        )
    if np.any(out < 0):
        raise InvalidSpecError("albedo values must be nonnegative")
    return out


def default_nine_lights() -> LightSet:
    """Nine canonical unit lights: two azimuth rings plus a frontal source.

    Columns 1-4 sit at 50 degrees elevation (azimuths 0, 90, 180, 270),
    columns 5-8 at 70 degrees (azimuths 45, 135, 225, 315), and column 9
    is [0, 0, 1].
    """
    cols = []
    for elev_deg, az_start in ((50.0, 0.0), (70.0, 45.0)):
        elev = np.deg2rad(elev_deg)
        for k in range(4):
            az = np.deg2rad(az_start + 90.0 * k)
            cols.append(
                [np.cos(elev) * np.cos(az), np.cos(elev) * np.sin(az), np.sin(elev)]
            )
    cols.append([0.0, 0.0, 1.0])
    return LightSet(np.array(cols).T)


@dataclass(frozen=True)
class Corruption:
    """Replace one image with a near-light render plus Gaussian noise.

    ``distance`` is the source distance in units of the domain width;
    ``inf`` keeps the parallel render (noise-only corruption).
    """

    image_index: int
    distance: float = np.inf
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.distance <= 0 or np.isnan(self.distance):
            raise InvalidSpecError(f"corruption distance must be positive, got {self.distance}")
        if self.noise_sigma < 0 or not np.isfinite(self.noise_sigma):
            raise InvalidSpecError(f"noise sigma must be nonnegative, got {self.noise_sigma}")


@dataclass
class SyntheticScenario:
    """Complete recipe for a reproducible synthetic dataset."""

    spec: GridSpec
    surface: str = "gaussian_bump"
    surface_params: dict = field(default_factory=dict)
    albedo: str = "constant"
    albedo_params: dict = field(default_factory=dict)
    lights: LightSet | None = None
    corruptions: tuple[Corruption, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.lights is None:
            self.lights = default_nine_lights()
        self.corruptions = tuple(self.corruptions)
        q = self.lights.count
        seen = set()
        for c in self.corruptions:
            if not 1 <= c.image_index <= q:
                raise InvalidSpecError(
                    f"corruption index {c.image_index} outside 1..{q}"
                )
            if c.image_index in seen:
                raise InvalidSpecError(
                    f"duplicate corruption for image {c.image_index}"
                )
            seen.add(c.image_index)


@dataclass
class SyntheticDataset:
    """Rendered images together with the ground truth that produced them."""

    data: DataMatrix
    surface: SurfaceGrid
    field: NormalAlbedoField
    lights: LightSet
    clean: DataMatrix


def generate_dataset(scn: SyntheticScenario) -> SyntheticDataset:
    """Render a scenario: clean images, then per-image corruption.

    Uncorrupted images are parallel-light renders.  Each corrupted image
    is re-rendered with its finite source distance, gets N(0, sigma^2)
    noise from a stream keyed by (seed, image index), and is clamped to
    [0, 1].
    """
    spec = scn.spec
    surface = builtin_surface(scn.surface, scn.surface_params, spec)
    ux, uy = surface_gradient(scn.surface, scn.surface_params, spec)
    albedo = albedo_pattern(scn.albedo, scn.albedo_params, spec)
    fld = field_from_gradient(ux, uy, albedo)
    lights = scn.lights

    clean = render_lambertian(fld, lights, spec)
    values = clean.values.copy()
    for c in scn.corruptions:
        t = c.image_index - 1
        one = LightSet(lights.directions[:, [t]], np.array([c.distance]))
        column = render_lambertian(fld, one, spec, heights=surface).values[:, 0]
        if c.noise_sigma > 0:
            rng = np.random.default_rng([scn.seed, c.image_index])
            column = column + rng.normal(0.0, c.noise_sigma, column.shape)
        values[:, t] = np.clip(column, 0.0, 1.0)
    return SyntheticDataset(DataMatrix(values, spec), surface, fld, lights, clean)


def scenario_to_dict(scn: SyntheticScenario) -> dict:
    """Plain-dict form of a scenario for config serialization."""
    out = {
        "grid": {
            "width": scn.spec.width,
            "interior_x": scn.spec.interior_x,
            "interior_y": scn.spec.interior_y,
        },
        "surface": {"name": scn.surface, **scn.surface_params},
        "albedo": {"name": scn.albedo, **scn.albedo_params},
        "lights": [list(col) for col in scn.lights.directions.T],
        "corruptions": [
            {
                "image": c.image_index,
                "distance": "inf" if np.isinf(c.distance) else c.distance,
                "noise_sigma": c.noise_sigma,
            }
            for c in scn.corruptions
        ],
        "seed": scn.seed,
    }
    return out


def scenario_from_dict(cfg: dict) -> SyntheticScenario:
    """Parse the config-file form produced by :func:`scenario_to_dict`.

    The ``lights`` key may be omitted (falls back to the default nine) and
    surface/albedo sections may be plain names or name+parameter tables.
    """
    try:
        grid = cfg["grid"]
        spec = GridSpec(
            float(grid["width"]), int(grid["interior_x"]), int(grid["interior_y"])
        )
    except KeyError as exc:
        raise InvalidSpecError(f"scenario config missing key: {exc}") from exc

    def split(section, default_name):
        raw = cfg.get(section, default_name)
        if isinstance(raw, str):
            return raw, {}
        raw = dict(raw)
        try:
            name = raw.pop("name")
        except KeyError:
            raise InvalidSpecError(f"{section} section needs a 'name' key") from None
        return name, raw

    surface, surface_params = split("surface", "gaussian_bump")
    albedo, albedo_params = split("albedo", "constant")

    lights = None
    if "lights" in cfg:
        lights = LightSet(np.array(cfg["lights"], dtype=float).T)

    corruptions = []
    for entry in cfg.get("corruptions", []):
        dist = entry.get("distance", "inf")
        corruptions.append(
            Corruption(
                int(entry["image"]),
                np.inf if dist in ("inf", None) else float(dist),
                float(entry.get("noise_sigma", 0.0)),
            )
        )
    return SyntheticScenario(
        spec=spec,
        surface=surface,
        surface_params=surface_params,
        albedo=albedo,
        albedo_params=albedo_params,
        lights=lights,
        corruptions=tuple(corruptions),
        seed=int(cfg.get("seed", 0)),
    )
