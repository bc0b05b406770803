"""Linear uncalibrated light estimation via rank-3 factorization.

The pipeline: SVD-truncate the data matrix to rank 3, solve a 6-parameter
least-squares system for the symmetric Gram matrix that makes the light
factor columns unit-norm, Cholesky-factor it, and map both factors back.
An indefinite Gram matrix is the breakdown signal used by the screening
module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    BreakdownError,
    DegenerateDataError,
    ShapeError,
    TooFewImagesError,
    UnderdeterminedError,
)
from .model import DARK_PIXEL_TOL, DataMatrix, LightSet, NormalAlbedoField

# relative positive-definiteness tolerance for the Cholesky gate
CHOLESKY_RTOL = 1e-12
# relative numerical-rank cutoff for the 6-parameter least-squares solve
GRAM_LSTSQ_RCOND = 1e-10


@dataclass
class Rank3Factorization:
    """Best rank-3 factorization of a data matrix.

    ``pixel_factor`` rows are the top three left singular vectors scaled
    by their singular values; ``light_factor`` rows are the corresponding
    right singular vectors, so ``pixel_factor.T @ light_factor`` is the
    best rank-3 approximation in the 2-norm.
    """

    pixel_factor: np.ndarray  # (3, p)
    light_factor: np.ndarray  # (3, q)
    singular_values: np.ndarray  # (q,), descending

    @property
    def image_count(self) -> int:
        return self.light_factor.shape[1]


@dataclass
class GramCandidate:
    """Symmetric 3x3 Gram matrix fitted to the unit-norm constraints."""

    gram: np.ndarray  # (3, 3) symmetric
    params: np.ndarray  # (6,) = [g11, g22, g33, g12, g13, g23]
    min_eigenvalue: float
    residual: float
    degenerate: bool = False


def rank3_factor(data: DataMatrix) -> Rank3Factorization:
    """Compact SVD of the image stack, truncated to the top three modes."""
    M = data.values
    p, q = M.shape
    if q < 3:
        raise TooFewImagesError(f"rank-3 factorization needs at least 3 images, got {q}")
    if p < q:
        raise ShapeError(f"expected at least as many pixels as images, got {M.shape}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        raise DegenerateDataError("data matrix is identically zero")
    pixel_factor = s[:3, None] * U[:, :3].T
    light_factor = Vt[:3].copy()
    return Rank3Factorization(pixel_factor, light_factor, s)


def gram_design_matrix(light_factor: np.ndarray) -> np.ndarray:
    """Quadratic-form design matrix: one row per light-factor column.

    Row t of the output, dotted with ``[g11,g22,g33,g12,g13,g23]``, equals
    ``z_t.T @ G @ z_t`` for the symmetric matrix G those six numbers
    define.
    """
    Z = np.asarray(light_factor, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != 3:
        raise ShapeError(f"light factor must be 3 x q, got {Z.shape}")
    z1, z2, z3 = Z
    return np.column_stack(
        [z1**2, z2**2, z3**2, 2 * z1 * z2, 2 * z1 * z3, 2 * z2 * z3]
    )


def gram_from_params(params: np.ndarray) -> np.ndarray:
    """Assemble the symmetric 3x3 matrix from its six free entries."""
    g11, g22, g33, g12, g13, g23 = np.asarray(params, dtype=float)
    return np.array([[g11, g12, g13], [g12, g22, g23], [g13, g23, g33]])


def solve_gram(design: np.ndarray) -> GramCandidate:
    """Least-squares fit of the Gram matrix to the unit-norm constraints.

    Uses a rank-revealing solve with relative cutoff
    :data:`GRAM_LSTSQ_RCOND`; a numerical rank below 6 sets the
    ``degenerate`` flag (minimum-norm solution is still returned).
    """
    H = np.asarray(design, dtype=float)
    if H.ndim != 2 or H.shape[1] != 6:
        raise ShapeError(f"design matrix must be q x 6, got {H.shape}")
    q = H.shape[0]
    if q < 6:
        raise UnderdeterminedError(
            f"Gram fit needs at least six images, got {q}"
        )
    ones = np.ones(q)
    params, _, rank, _ = np.linalg.lstsq(H, ones, rcond=GRAM_LSTSQ_RCOND)
    gram = gram_from_params(params)
    min_eig = float(np.linalg.eigvalsh(gram)[0])
    residual = float(np.linalg.norm(H @ params - ones))
    return GramCandidate(gram, params, min_eig, residual, degenerate=rank < 6)


def cholesky_factor(gram: np.ndarray) -> np.ndarray:
    """Upper-triangular factor R with ``R.T @ R = gram``.

    Raises :class:`BreakdownError` (carrying the smallest eigenvalue) when
    the matrix is not positive definite beyond the scale-relative
    tolerance, which is the non-ideality signal of the linear method.
    """
    G = np.asarray(gram, dtype=float)
    if G.shape != (3, 3):
        raise ShapeError(f"Gram matrix must be 3 x 3, got {G.shape}")
    if np.max(np.abs(G - G.T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
        raise ShapeError("Gram matrix must be symmetric")
    eigs = np.linalg.eigvalsh(G)
    min_eig = float(eigs[0])
    tol = CHOLESKY_RTOL * float(np.max(np.abs(eigs)))
    if min_eig <= tol:
        raise BreakdownError(min_eig)
    return scipy.linalg.cholesky(G, lower=False)


def field_from_pseudonormals(pseudo: np.ndarray) -> NormalAlbedoField:
    """Split albedo-scaled normals into unit normals plus albedo.

    Columns shorter than the dark-pixel tolerance get albedo 0 and the
    default normal [0, 0, 1].
    """
    pseudo = np.asarray(pseudo, dtype=float)
    rho = np.linalg.norm(pseudo, axis=0)
    dark = rho < DARK_PIXEL_TOL
    safe = np.where(dark, 1.0, rho)
    normals = pseudo / safe
    normals[:, dark] = np.array([0.0, 0.0, 1.0])[:, None]
    return NormalAlbedoField(normals, np.where(dark, 0.0, rho))


@dataclass
class LinearEstimate:
    """Output of the linear light-estimation pipeline, pre-alignment.

    ``raw_lights`` columns are unit-norm only up to the least-squares
    residual of the Gram fit; ``lights`` holds the normalized version.
    The orthogonal ambiguity is unresolved until :func:`align_estimate`.
    """

    lights: LightSet
    raw_lights: np.ndarray  # (3, q)
    pseudo_normals: np.ndarray  # (3, p), albedo-scaled
    field: NormalAlbedoField
    gram: GramCandidate
    factorization: Rank3Factorization


def estimate_lights_linear(data: DataMatrix) -> LinearEstimate:
    """Estimate lights and albedo-scaled normals up to a global rotation."""
    if data.image_count < 6:
        raise TooFewImagesError(
            f"linear light estimation needs at least six images, got {data.image_count}"
        )
    fact = rank3_factor(data)
    candidate = solve_gram(gram_design_matrix(fact.light_factor))
    R = cholesky_factor(candidate.gram)
    raw_lights = R @ fact.light_factor
    pseudo = scipy.linalg.solve_triangular(R, fact.pixel_factor, trans="T", lower=False)
    return LinearEstimate(
        lights=LightSet(raw_lights.copy()),
        raw_lights=raw_lights,
        pseudo_normals=pseudo,
        field=field_from_pseudonormals(pseudo),
        gram=candidate,
        factorization=fact,
    )


def align_lights(raw_lights: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Orthogonal matrix Q minimizing ``|| Q @ raw_lights - reference ||_F``.

    Solved by orthogonal Procrustes; Q may be a reflection (det -1).
    """
    A = np.asarray(raw_lights, dtype=float)
    B = np.asarray(reference, dtype=float)
    if A.shape != B.shape or A.shape[0] != 3:
        raise ShapeError(f"alignment needs matching 3 x q arrays, got {A.shape} vs {B.shape}")
    rot, _ = scipy.linalg.orthogonal_procrustes(A.T, B.T)
    return rot.T


@dataclass
class AlignedEstimate:
    """Linear estimate after resolving the orthogonal ambiguity."""

    lights: LightSet
    field: NormalAlbedoField
    pseudo_normals: np.ndarray
    rotation: np.ndarray  # (3, 3) orthogonal, includes any sign flip
    reflection: bool  # Procrustes branch had det -1
    flipped: bool  # concave/convex guard negated both factors


def align_estimate(estimate, reference=None) -> AlignedEstimate:
    """Rotate an estimate onto reference lights (or just fix its sign).

    Works for any estimate exposing ``raw_lights`` and ``pseudo_normals``.
    With no reference the rotation is the identity.  Afterwards, if the
    median third normal component is negative the surface is inverted:
    both factors are negated (the data matrix is unchanged under the
    joint sign flip).
    """
    if reference is None:
        Q = np.eye(3)
        reflection = False
    else:
        ref = (
            reference.directions
            if isinstance(reference, LightSet)
            else np.asarray(reference, float)
        )
        Q = align_lights(estimate.raw_lights, ref)
        reflection = bool(np.linalg.det(Q) < 0)
    lights = Q @ estimate.raw_lights
    pseudo = Q @ estimate.pseudo_normals
    field = field_from_pseudonormals(pseudo)
    flipped = bool(np.median(field.normals[2]) < 0)
    if flipped:
        lights = -lights
        pseudo = -pseudo
        field = field_from_pseudonormals(pseudo)
        Q = -Q
    return AlignedEstimate(
        lights=LightSet(lights),
        field=field,
        pseudo_normals=pseudo,
        rotation=Q,
        reflection=reflection,
        flipped=flipped,
    )
