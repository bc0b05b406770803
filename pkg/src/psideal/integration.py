"""Height-field recovery from normals and the surface error metric.

The integrator solves the least-squares problem ``min || D u - g ||^2``
where D takes forward differences along grid edges and g holds the target
gradients averaged onto those edges.  The normal equations are the
standard 5-point Neumann Laplacian, which the type-II discrete cosine
basis diagonalizes, so the solve is two DCTs and a pointwise division.
The constant mode is fixed to zero mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import InvalidFieldError, InvalidSpecError, ShapeError, UndefinedMetricError
from .model import GridSpec, NormalAlbedoField, SurfaceGrid

# below this third normal component the gradient is masked to zero
STEEP_NORMAL_TOL = 1e-6


@dataclass
class GradientField:
    """Per-node surface gradients plus a mask of untrusted pixels."""

    ux: np.ndarray
    uy: np.ndarray
    masked: np.ndarray | None = None

    def __post_init__(self):
        self.ux = np.asarray(self.ux, dtype=float)
        self.uy = np.asarray(self.uy, dtype=float)
        if self.ux.shape != self.uy.shape:
            raise ShapeError(
                f"gradient components differ in shape: {self.ux.shape} vs {self.uy.shape}"
            )
        if not (np.all(np.isfinite(self.ux)) and np.all(np.isfinite(self.uy))):
            raise InvalidFieldError("gradient field must be finite")
        if self.masked is None:
            self.masked = np.zeros(self.ux.shape, dtype=bool)
        else:
            self.masked = np.asarray(self.masked, dtype=bool)
            if self.masked.shape != self.ux.shape:
                raise ShapeError("mask shape does not match gradient field")


def gradients_from_normals(field: NormalAlbedoField, spec: GridSpec) -> GradientField:
    """Invert the unit-normal map to per-node gradients.

    ``ux = -n1 / n3`` and ``uy = -n2 / n3``; pixels whose third component
    falls below :data:`STEEP_NORMAL_TOL` (steep or inverted estimates)
    get gradient 0 and are flagged in the mask.
    """
    if field.pixel_count != spec.num_pixels:
        raise ShapeError(
            f"field has {field.pixel_count} pixels but grid {spec.shape} "
            f"needs {spec.num_pixels}"
        )
    n1, n2, n3 = field.normals
    bad = n3 < STEEP_NORMAL_TOL
    safe = np.where(bad, 1.0, n3)
    ux = np.where(bad, 0.0, -n1 / safe).reshape(spec.shape)
    uy = np.where(bad, 0.0, -n2 / safe).reshape(spec.shape)
    return GradientField(ux, uy, bad.reshape(spec.shape))


def _edge_average(values: np.ndarray, axis: int) -> np.ndarray:
    sliced_lo = [slice(None), slice(None)]
    sliced_hi = [slice(None), slice(None)]
    sliced_lo[axis] = slice(None, -1)
    sliced_hi[axis] = slice(1, None)
    return 0.5 * (values[tuple(sliced_lo)] + values[tuple(sliced_hi)])


def _difference_transpose(edges: np.ndarray, axis: int, h: float) -> np.ndarray:
    shape = list(edges.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    lo = [slice(None), slice(None)]
    hi = [slice(None), slice(None)]
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] -= edges / h
    out[tuple(hi)] += edges / h
    return out


def integrate_poisson(gradient: GradientField, spec: GridSpec) -> SurfaceGrid:
    """Least-squares height field for a (possibly inconsistent) gradient.

    Exact for gradients of affine surfaces; second-order accurate for
    smooth ones.  The returned heights have zero mean.
    """
    if spec.nx < 3 or spec.ny < 3:
        raise InvalidSpecError(f"integration needs at least a 3x3 grid, got {spec.shape}")
    if gradient.ux.shape != spec.shape:
        raise ShapeError(
            f"gradient of shape {gradient.ux.shape} does not match grid {spec.shape}"
        )
    h = spec.spacing
    rhs = _difference_transpose(_edge_average(gradient.ux, 0), 0, h)
    rhs += _difference_transpose(_edge_average(gradient.uy, 1), 1, h)

    coeff = scipy.fft.dctn(rhs, type=2, norm="ortho")
    kx = np.arange(spec.nx)
    ky = np.arange(spec.ny)
    eig_x = (4.0 / h**2) * np.sin(np.pi * kx / (2.0 * spec.nx)) ** 2
    eig_y = (4.0 / h**2) * np.sin(np.pi * ky / (2.0 * spec.ny)) ** 2
    eig = eig_x[:, None] + eig_y[None, :]
    eig[0, 0] = 1.0  # constant mode handled by the gauge fix below
    coeff /= eig
    coeff[0, 0] = 0.0
    heights = scipy.fft.idctn(coeff, type=2, norm="ortho")
    heights -= heights.mean()
    return SurfaceGrid(heights, spec)


def heights_from_normals(field: NormalAlbedoField, spec: GridSpec) -> SurfaceGrid:
    """Convenience composition: normals -> gradients -> heights."""
    return integrate_poisson(gradients_from_normals(field, spec), spec)


def relative_error_inf(surface: SurfaceGrid, reference: SurfaceGrid) -> float:
    """Max-norm relative height error after aligning means.

    Heights are only recovered up to a constant, so both fields are
    shifted to zero mean before comparing.
    """
    if surface.heights.shape != reference.heights.shape:
        raise ShapeError(
            f"surface grids differ in shape: {surface.heights.shape} "
            f"vs {reference.heights.shape}"
        )
    u = surface.heights - surface.heights.mean()
    ref = reference.heights - reference.heights.mean()
    denom = np.max(np.abs(ref))
    if denom == 0.0:
        raise UndefinedMetricError("reference surface is constant; relative error undefined")
    return float(np.max(np.abs(u - ref)) / denom)
