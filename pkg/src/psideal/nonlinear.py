"""Nonlinear fit of the triangular Gram factor by damped Gauss-Newton.

Instead of solving for the symmetric Gram matrix and factoring it
afterwards, this route parameterizes the upper-triangular factor R
directly by its six entries and drives the unit-norm constraint residuals
to zero.  The induced Gram matrix R.T @ R is positive semidefinite by
construction, so breakdown shows up as non-convergence (or a tiny
trailing Jacobian singular value) rather than a failed Cholesky.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateDataError,
    DivergenceError,
    TooFewImagesError,
    UnderdeterminedError,
)
from .linear import Rank3Factorization, field_from_pseudonormals, rank3_factor
from .model import DataMatrix, LightSet, NormalAlbedoField

MAX_ITERATIONS = 200
STEP_RTOL = 1e-10
MIN_STEP_SCALE = 2.0**-20
PINV_CUTOFF = 1e-12
CONVERGENCE_TOL = 1e-8

# parameter order: [r11, r12, r13, r22, r23, r33]
_ROW_INDEX = np.array([0, 0, 0, 1, 1, 2])
_COL_INDEX = np.array([0, 1, 2, 1, 2, 2])


def identity_params() -> np.ndarray:
    """Parameters of the identity triangular factor."""
    return np.array([1.0, 0.0, 0.0, 1.0, 0.0, 1.0])


def upper_triangular(params: np.ndarray) -> np.ndarray:
    """Expand the six free entries into the 3x3 upper-triangular matrix."""
    params = np.asarray(params, dtype=float)
    R = np.zeros((3, 3))
    R[_ROW_INDEX, _COL_INDEX] = params
    return R


def induced_gram(params: np.ndarray) -> np.ndarray:
    """The (always positive semidefinite) Gram matrix R.T @ R."""
    R = upper_triangular(params)
    return R.T @ R


def residual(params: np.ndarray, light_factor: np.ndarray) -> np.ndarray:
    """Unit-norm constraint residuals, one per light-factor column.

    Component t is ``||R z_t||^2 - 1``.
    """
    RZ = upper_triangular(params) @ np.asarray(light_factor, dtype=float)
    return (RZ**2).sum(axis=0) - 1.0


def jacobian(params: np.ndarray, light_factor: np.ndarray) -> np.ndarray:
    """Closed-form q x 6 Jacobian of :func:`residual`.

    With w_t = R z_t, the derivative of ``||R z_t||^2`` with respect to
    entry r_ij is ``2 w_t[i] z_t[j]``, laid out in the parameter order
    [r11, r12, r13, r22, r23, r33].
    """
    Z = np.asarray(light_factor, dtype=float)
    W = upper_triangular(params) @ Z
    return 2.0 * (W[_ROW_INDEX] * Z[_COL_INDEX]).T


@dataclass
class GNResult:
    """Gauss-Newton outcome plus the rank diagnostics screening needs.

    ``singular_values`` are the six Jacobian singular values at the final
    iterate (descending, zero-padded if fewer columns were available) and
    ``rank_gap`` is the ratio of the sixth to the fifth -- the nonideality
    indicator of the nonlinear method.
    """

    solution: np.ndarray
    iterations: int
    residual_norm: float
    singular_values: np.ndarray
    rank_gap: float
    converged: bool
    degenerate: bool
    residual_history: list[float] = field(default_factory=list)

    @property
    def gram(self) -> np.ndarray:
        return induced_gram(self.solution)


def _rank_diagnostics(J: np.ndarray) -> tuple[np.ndarray, float, bool]:
    svals = np.linalg.svd(J, compute_uv=False)
    if svals.size < 6:
        svals = np.concatenate([svals, np.zeros(6 - svals.size)])
    degenerate = svals[4] <= 0.0
    gap = 0.0 if degenerate else float(svals[5] / svals[4])
    return svals, gap, degenerate


def eta_indicator(result: GNResult) -> float:
    """Trailing-to-fifth singular value ratio in [0, 1]; 0 if degenerate."""
    return result.rank_gap


def gauss_newton_solve(
    light_factor: np.ndarray,
    initial_params: np.ndarray | None = None,
    allow_underdetermined: bool = False,
) -> GNResult:
    """Damped Gauss-Newton on the unit-norm constraint residuals.

    Steps are pseudoinverse solves with singular values below
    ``1e-12 * largest`` suppressed; each step is backtracked by halving
    until the squared residual norm decreases (first decrease accepted,
    minimum scale 2**-20).  Iteration stops on a relatively tiny step, a
    round with no achievable decrease, or after 200 iterations.
    Convergence additionally requires the final max-norm residual below
    1e-8; the rank diagnostics are reported either way.
    """
    Z = np.asarray(light_factor, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != 3:
        raise UnderdeterminedError(f"light factor must be 3 x q, got {Z.shape}")
    if Z.shape[1] < 6 and not allow_underdetermined:
        raise UnderdeterminedError(
            f"nonlinear fit needs at least six images, got {Z.shape[1]}"
        )
    r = identity_params() if initial_params is None else np.array(initial_params, dtype=float)

    F = residual(r, Z)
    history = [float(np.linalg.norm(F))]
    J = jacobian(r, Z)
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        U, svals, Vt = np.linalg.svd(J, full_matrices=False)
        inv = np.where(svals > PINV_CUTOFF * svals[0], 1.0 / np.where(svals > 0, svals, 1.0), 0.0)
        step = -(Vt.T * inv) @ (U.T @ F)
        if np.linalg.norm(step) <= STEP_RTOL * (1.0 + np.linalg.norm(r)):
            iterations -= 1
            break

        # backtracking on the squared residual norm
        current = float(F @ F)
        scale = 1.0
        accepted = False
        while scale >= MIN_STEP_SCALE:
            trial = r + scale * step
            F_trial = residual(trial, Z)
            value = float(F_trial @ F_trial)
            if np.isfinite(value) and value < current:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            iterations -= 1
            break
        r, F = trial, F_trial
        history.append(float(np.linalg.norm(F)))
        if not np.all(np.isfinite(r)):
            svals6, gap, _ = _rank_diagnostics(jacobian(np.nan_to_num(r), Z))
            raise DivergenceError(svals6, gap)
        J = jacobian(r, Z)

    svals6, gap, degenerate = _rank_diagnostics(J)
    norm = float(np.linalg.norm(F))
    return GNResult(
        solution=r,
        iterations=iterations,
        residual_norm=norm,
        singular_values=svals6,
        rank_gap=gap,
        converged=bool(np.max(np.abs(F)) < CONVERGENCE_TOL),
        degenerate=degenerate,
        residual_history=history,
    )


@dataclass
class NonlinearEstimate:
    """Light estimate obtained through the triangular-factor fit.

    Mirrors the linear pipeline's output shape so downstream alignment
    and reconstruction treat both routes uniformly.
    """

    lights: LightSet
    raw_lights: np.ndarray
    pseudo_normals: np.ndarray
    field: NormalAlbedoField
    result: GNResult
    factorization: Rank3Factorization


def estimate_lights_nonlinear(data: DataMatrix) -> NonlinearEstimate:
    """Estimate lights up to a rotation via the Gauss-Newton route.

    Unlike the linear route this cannot hit a Cholesky breakdown; badly
    non-ideal data shows up as ``result.converged == False`` (and a small
    rank gap) instead.  A numerically singular triangular factor raises,
    since the normals require its inverse transpose.
    """
    if data.image_count < 6:
        raise TooFewImagesError(
            f"nonlinear light estimation needs at least six images, got {data.image_count}"
        )
    fact = rank3_factor(data)
    result = gauss_newton_solve(fact.light_factor)
    R = upper_triangular(result.solution)
    diag = np.abs(np.diag(R))
    if np.min(diag) <= 1e-12 * max(np.max(np.abs(R)), 1.0):
        raise DegenerateDataError(
            "triangular factor from the nonlinear fit is singular; "
            "normals are not recoverable"
        )
    raw_lights = R @ fact.light_factor
    pseudo = scipy.linalg.solve_triangular(R, fact.pixel_factor, trans="T", lower=False)
    return NonlinearEstimate(
        lights=LightSet(raw_lights.copy()),
        raw_lights=raw_lights,
        pseudo_normals=pseudo,
        field=field_from_pseudonormals(pseudo),
        result=result,
        factorization=fact,
    )
