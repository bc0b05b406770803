"""Core domain types, grid geometry, and the Lambertian forward/inverse model.

Conventions used throughout the package:

* Grid arrays are indexed ``[i, j]`` where ``i`` runs along x (width) and
  ``j`` along y (height).  Flattening is row-major over ``(i, j)``, so the
  pixel index of node ``(i, j)`` is ``k = i * ny + j``.
* Image intensities are real values in ``[0, 1]``.
* Light direction columns are unit vectors pointing from the object toward
  the source.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidFieldError,
    InvalidSpecError,
    RankDeficientLightsError,
    ShapeError,
    TooFewImagesError,
)

# Pseudo-normal columns shorter than this get albedo 0 and the default
# normal instead of a 0/0 division.
DARK_PIXEL_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Rectangular sampling grid tied to a physical domain.

    The domain is ``[-width/2, width/2] x [-height/2, height/2]`` sampled
    on ``(interior_x + 2) x (interior_y + 2)`` nodes with uniform spacing
    ``width / (interior_x + 1)`` in both directions.
    """

    width: float
    interior_x: int
    interior_y: int

    def __post_init__(self):
        if not np.isfinite(self.width) or self.width <= 0:
            raise InvalidSpecError(f"domain width must be positive, got {self.width!r}")
        if self.interior_x < 1 or self.interior_y < 1:
            raise InvalidSpecError(
                "interior pixel counts must be at least 1, got "
                f"({self.interior_x}, {self.interior_y})"
            )

    @property
    def spacing(self) -> float:
        return self.width / (self.interior_x + 1)

    @property
    def height(self) -> float:
        return (self.interior_y + 1) * self.spacing

    @property
    def nx(self) -> int:
        return self.interior_x + 2

    @property
    def ny(self) -> int:
        return self.interior_y + 2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def num_pixels(self) -> int:
        return self.nx * self.ny

    @classmethod
    def from_nodes(cls, width: float, nx: int, ny: int) -> "GridSpec":
        return cls(width, nx - 2, ny - 2)


def grid_coordinates(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Node coordinates ``x_i = -width/2 + i*h`` and ``y_j = -height/2 + j*h``."""
    h = spec.spacing
    x = -spec.width / 2.0 + np.arange(spec.nx) * h
    y = -spec.height / 2.0 + np.arange(spec.ny) * h
    return x, y


def flatten_grid(values: np.ndarray) -> np.ndarray:
    """Vectorize a ``(nx, ny)`` node array in the package pixel order."""
    return np.asarray(values, dtype=float).reshape(-1)


def unflatten_grid(vector: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Inverse of :func:`flatten_grid`."""
    vector = np.asarray(vector, dtype=float)
    if vector.size != spec.num_pixels:
        raise ShapeError(
            f"vector of length {vector.size} does not fit grid {spec.shape}"
        )
    return vector.reshape(spec.shape)


@dataclass
class DataMatrix:
    """Stack of vectorized images: one column per lighting condition."""

    values: np.ndarray
    spec: GridSpec | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ShapeError(f"data matrix must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise InvalidFieldError("data matrix contains non-finite entries")
        if np.any(self.values < 0):
            raise InvalidFieldError("image intensities must be nonnegative")
        if self.spec is not None and self.values.shape[0] != self.spec.num_pixels:
            raise ShapeError(
                f"{self.values.shape[0]} pixels do not match grid {self.spec.shape}"
            )

    @property
    def pixel_count(self) -> int:
        return self.values.shape[0]

    @property
    def image_count(self) -> int:
        return self.values.shape[1]

    def subset(self, indices_1based) -> "DataMatrix":
        """Column subset, keeping the given 1-based image indices in order."""
        cols = [int(i) - 1 for i in indices_1based]
        if any(c < 0 or c >= self.image_count for c in cols):
            raise ShapeError(f"image indices out of range 1..{self.image_count}")
        return DataMatrix(self.values[:, cols], self.spec)


@dataclass
class LightSet:
    """Unit light-direction columns with optional finite source distances.

    ``distances`` are expressed in units of the domain width; ``inf`` means
    a parallel (infinitely far) source.  Directions are normalized on
    construction.
    """

    directions: np.ndarray
    distances: np.ndarray | None = None

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        if d.ndim != 2 or d.shape[0] != 3:
            raise ShapeError(f"light directions must be 3 x q, got {d.shape}")
        norms = np.linalg.norm(d, axis=0)
        if np.any(norms == 0) or not np.all(np.isfinite(norms)):
            raise InvalidFieldError("light directions must be nonzero and finite")
        self.directions = d / norms
        q = d.shape[1]
        if self.distances is None:
            self.distances = np.full(q, np.inf)
        else:
            dist = np.asarray(self.distances, dtype=float)
            if dist.shape != (q,):
                raise ShapeError(f"distances must have shape ({q},), got {dist.shape}")
            if np.any(dist <= 0) or np.any(np.isnan(dist)):
                raise InvalidFieldError("light distances must be positive")
            self.distances = dist

    @property
    def count(self) -> int:
        return self.directions.shape[1]

    def subset(self, indices_1based) -> "LightSet":
        cols = [int(i) - 1 for i in indices_1based]
        return LightSet(self.directions[:, cols], self.distances[cols])


@dataclass
class NormalAlbedoField:
    """Per-pixel unit normals plus nonnegative albedo.

    Fields derived from explicit surfaces have strictly positive third
    components; fields estimated from noisy data may violate that, which
    downstream gradient extraction masks rather than rejects.
    """

    normals: np.ndarray
    albedo: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normals, dtype=float)
        a = np.asarray(self.albedo, dtype=float)
        if n.ndim != 2 or n.shape[0] != 3:
            raise ShapeError(f"normals must be 3 x p, got {n.shape}")
        if a.shape != (n.shape[1],):
            raise ShapeError(
                f"albedo of shape {a.shape} does not match {n.shape[1]} pixels"
            )
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(a))):
            raise InvalidFieldError("normals and albedo must be finite")
        norms = np.linalg.norm(n, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise InvalidFieldError("normal columns must have unit length")
        if np.any(a < 0):
            raise InvalidFieldError("albedo must be nonnegative")
        self.normals = n
        self.albedo = a

    @property
    def pixel_count(self) -> int:
        return self.normals.shape[1]


@dataclass
class SurfaceGrid:
    """Sampled height field on a :class:`GridSpec` grid."""

    heights: np.ndarray
    spec: GridSpec

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        if h.shape != self.spec.shape:
            raise ShapeError(f"heights of shape {h.shape} do not match grid {self.spec.shape}")
        if not np.all(np.isfinite(h)):
            raise InvalidFieldError("surface heights must be finite")
        self.heights = h


def normals_from_gradient(ux, uy) -> np.ndarray:
    """Unit normals of an explicit surface from its partial derivatives.

    Returns an array of shape ``(3,) + shape(ux)`` holding
    ``[-ux, -uy, 1] / sqrt(1 + ux**2 + uy**2)`` per node.  The third
    component is always positive.
    """
    ux = np.asarray(ux, dtype=float)
    uy = np.asarray(uy, dtype=float)
    if ux.shape != uy.shape:
        raise ShapeError(f"gradient components differ in shape: {ux.shape} vs {uy.shape}")
    if not (np.all(np.isfinite(ux)) and np.all(np.isfinite(uy))):
        raise InvalidFieldError("gradient components must be finite")
    denom = np.sqrt(1.0 + ux**2 + uy**2)
    return np.stack([-ux / denom, -uy / denom, 1.0 / denom])


def field_from_gradient(ux, uy, albedo=None) -> NormalAlbedoField:
    """Build a pixel field from node gradients, flattening in pixel order."""
    normals = normals_from_gradient(ux, uy)
    p = normals[0].size
    flat = normals.reshape(3, p)
    if albedo is None:
        albedo = np.ones(p)
    else:
        albedo = np.asarray(albedo, dtype=float).reshape(-1)
    return NormalAlbedoField(flat, albedo)


def render_lambertian(
    field: NormalAlbedoField,
    lights: LightSet,
    spec: GridSpec,
    heights: np.ndarray | None = None,
    falloff: bool = False,
    clamp: bool = True,
) -> DataMatrix:
    """Render the image stack of a Lambertian surface.

    Parallel sources give ``m = albedo * max(0, n . l)`` per pixel.  A
    source at finite distance ``delta`` sits at ``delta * width * l``; the
    per-pixel direction toward it replaces ``l`` in the same inner product,
    which requires the surface ``heights``.  ``falloff`` additionally
    applies inverse-square attenuation normalized to 1 at the nominal
    source distance.  Negative inner products are clamped to 0 (attached
    shadows) unless ``clamp`` is disabled for analysis purposes.
    """
    if field.pixel_count != spec.num_pixels:
        raise ShapeError(
            f"field has {field.pixel_count} pixels but grid {spec.shape} "
            f"needs {spec.num_pixels}"
        )
    out = field.albedo[:, None] * (field.normals.T @ lights.directions)

    finite = np.flatnonzero(np.isfinite(lights.distances))
    if finite.size:
        if heights is None:
            raise ShapeError("finite-distance lights require the surface heights")
        hgrid = heights.heights if isinstance(heights, SurfaceGrid) else np.asarray(heights, float)
        if hgrid.shape != spec.shape:
            raise ShapeError(f"heights of shape {hgrid.shape} do not match grid {spec.shape}")
        x, y = grid_coordinates(spec)
        xx, yy = np.meshgrid(x, y, indexing="ij")
        points = np.stack([xx.reshape(-1), yy.reshape(-1), hgrid.reshape(-1)], axis=1)
        for t in finite:
            nominal = lights.distances[t] * spec.width
            source = nominal * lights.directions[:, t]
            rays = source[None, :] - points
            dist = np.linalg.norm(rays, axis=1)
            rays /= dist[:, None]
            vals = field.albedo * np.einsum("kp,pk->p", field.normals, rays)
            if falloff:
                vals = vals * (nominal / dist) ** 2
            out[:, t] = vals

    if clamp:
        np.maximum(out, 0.0, out=out)
        return DataMatrix(out, spec)
    # unclamped renders may be negative; bypass DataMatrix validation
    result = DataMatrix(np.zeros_like(out), spec)
    result.values = out
    return result


def normals_from_lights(data: DataMatrix, lights: LightSet) -> NormalAlbedoField:
    """Recover normals and albedo from images under known lights.

    Solves the calibrated problem by right-multiplying the data matrix with
    the pseudoinverse of the light matrix, then normalizing columns.
    Pixels whose pseudo-normal is shorter than :data:`DARK_PIXEL_TOL` get
    albedo 0 and the default normal ``[0, 0, 1]``.
    """
    if lights.count < 3:
        raise TooFewImagesError(
            f"normal recovery needs at least 3 images, got {lights.count}"
        )
    L = lights.directions
    svals = np.linalg.svd(L, compute_uv=False)
    if svals[2] <= 1e-10 * svals[0]:
        raise RankDeficientLightsError(
            "light directions do not span 3-space (numerical rank < 3)"
        )
    pseudo = data.values @ np.linalg.pinv(L)  # (p, 3)
    rho = np.linalg.norm(pseudo, axis=1)
    dark = rho < DARK_PIXEL_TOL
    safe = np.where(dark, 1.0, rho)
    normals = (pseudo / safe[:, None]).T
    normals[:, dark] = np.array([0.0, 0.0, 1.0])[:, None]
    rho = np.where(dark, 0.0, rho)
    return NormalAlbedoField(normals, rho)
