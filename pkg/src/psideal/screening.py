"""Dataset-ideality indicators and greedy image-removal screening.

Two families, each in a standard and a fast variant:

* the linear screen scores each candidate removal by the smallest
  eigenvalue of the refitted Gram matrix (more positive = more ideal);
* the nonlinear screen scores candidates by the trailing singular-value
  ratio of the Gauss-Newton Jacobian.

Both remove the best-scoring image per round, stop when the score drops
(or only six images remain), and put the final removal back.  Image
indices are 1-based and always refer to the original dataset ordering.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDataError,
    DivergenceError,
    PsidealError,
    TooFewImagesError,
    UnrecoverableBreakdownError,
)
from .linear import CHOLESKY_RTOL, gram_design_matrix, rank3_factor, solve_gram
from .model import DataMatrix
from .nonlinear import gauss_newton_solve

METHOD_TAGS = ("algo1", "algo1-fast", "algo2", "algo2-fast")


@dataclass
class DatasetIndicators:
    """The four whole-dataset ideality numbers.

    ``fourth_singular_value`` is the 2-norm distance of the stack from
    rank 3; ``rank3_gap_ratio`` normalizes it by the third singular
    value; ``gram_min_eigenvalue`` is the linear method's definiteness
    signal; ``jacobian_rank_gap`` is the nonlinear method's trailing
    singular-value ratio.
    """

    fourth_singular_value: float
    rank3_gap_ratio: float
    gram_min_eigenvalue: float
    jacobian_rank_gap: float
    gram_degenerate: bool
    gn_converged: bool
    breakdown: bool


@dataclass
class IdealityReport:
    """Outcome of one screening run.

    ``trace`` lists removal events as (original 1-based image index,
    score at removal) in order; ``restored`` is the index put back by the
    final restoration step (always the last trace entry, when any);
    ``kept`` is the sorted list of retained image indices.
    """

    method: str
    indicators: DatasetIndicators | None
    trace: list[tuple[int, float]] = field(default_factory=list)
    restored: int | None = None
    kept: list[int] = field(default_factory=list)
    breakdown: bool = False
    error: str | None = None

    @property
    def removed(self) -> list[int]:
        return [t for t, _ in self.trace if t != self.restored]


def indicators(data: DataMatrix) -> DatasetIndicators:
    """Compute all four indicators; never raises on mere non-ideality."""
    if data.image_count < 6:
        raise TooFewImagesError(
            f"indicators need at least six images, got {data.image_count}"
        )
    fact = rank3_factor(data)
    s = fact.singular_values
    if s[2] == 0.0:
        raise DegenerateDataError("data matrix has rank below 3")
    candidate = solve_gram(gram_design_matrix(fact.light_factor))
    try:
        gn = gauss_newton_solve(fact.light_factor)
        gap, converged = gn.rank_gap, gn.converged
    except DivergenceError as exc:
        gap, converged = exc.rank_gap, False
    scale = float(np.max(np.abs(np.linalg.eigvalsh(candidate.gram))))
    return DatasetIndicators(
        fourth_singular_value=float(s[3]),
        rank3_gap_ratio=float(s[3] / s[2]),
        gram_min_eigenvalue=candidate.min_eigenvalue,
        jacobian_rank_gap=gap,
        gram_degenerate=candidate.degenerate,
        gn_converged=converged,
        breakdown=candidate.min_eigenvalue <= CHOLESKY_RTOL * scale,
    )


def _columns(data: DataMatrix, kept: list[int]) -> np.ndarray:
    return data.values[:, [s - 1 for s in kept]]


def _linear_scores(light_factor: np.ndarray) -> list[float]:
    """Smallest refit-Gram eigenvalue after dropping each column in turn."""
    design = gram_design_matrix(light_factor)
    scores = []
    for pos in range(design.shape[0]):
        cand = solve_gram(np.delete(design, pos, axis=0))
        scores.append(cand.min_eigenvalue)
    return scores


def _nonlinear_score(light_factor: np.ndarray) -> float:
    try:
        return gauss_newton_solve(light_factor).rank_gap
    except DivergenceError as exc:
        return exc.rank_gap


def _greedy_screen(data: DataMatrix, method: str, score_round) -> IdealityReport:
    """Shared removal loop.

    ``score_round(kept)`` returns one score per kept image for the
    current round; higher is better.  The best image is removed each
    round; iteration stops when the best score decreases (strictly) or
    six images remain, and the last removal is always restored.
    """
    q = data.image_count
    if q < 6:
        raise TooFewImagesError(f"screening needs at least six images, got {q}")
    report = IdealityReport(method=method, indicators=indicators(data))
    kept = list(range(1, q + 1))
    previous = None
    round_number = 0
    while len(kept) > 6:
        round_number += 1
        scores = score_round(kept)
        pos = int(np.argmax(scores))
        best = float(scores[pos])
        if round_number == 1 and method in ("algo1", "algo1-fast") and best <= 0.0:
            raise UnrecoverableBreakdownError(best)
        removed = kept.pop(pos)
        report.trace.append((removed, best))
        if previous is not None and best < previous:
            break
        previous = best
    if report.trace:
        report.restored = report.trace[-1][0]
        bisect.insort(kept, report.restored)
    report.kept = kept
    report.breakdown = report.indicators.breakdown
    return report


def screen_linear(data: DataMatrix, fast: bool = False) -> IdealityReport:
    """Greedy removal scored by the refit Gram matrix's smallest eigenvalue.

    The standard variant refactors the kept columns every round; the fast
    variant keeps using the initial factorization of the full stack and
    just drops rows of the design matrix.  A first round where even the
    best candidate is nonpositive raises
    :class:`UnrecoverableBreakdownError`.
    """
    initial = rank3_factor(data).light_factor if fast else None

    def score_round(kept):
        if fast:
            Z = initial[:, [s - 1 for s in kept]]
        else:
            Z = rank3_factor(DataMatrix(_columns(data, kept))).light_factor
        return _linear_scores(Z)

    return _greedy_screen(data, "algo1-fast" if fast else "algo1", score_round)


def screen_nonlinear(data: DataMatrix, fast: bool = False) -> IdealityReport:
    """Greedy removal scored by the Gauss-Newton rank-gap ratio.

    The standard variant refactors the kept-minus-candidate submatrix for
    every candidate; the fast variant factors the kept columns once per
    round and drops single columns of that factor.  Candidate divergence
    contributes its last-iterate score instead of aborting.
    """

    def score_round(kept):
        if fast:
            Z = rank3_factor(DataMatrix(_columns(data, kept))).light_factor
            return [
                _nonlinear_score(np.delete(Z, pos, axis=1))
                for pos in range(len(kept))
            ]
        scores = []
        for pos in range(len(kept)):
            subset = kept[:pos] + kept[pos + 1 :]
            Z = rank3_factor(DataMatrix(_columns(data, subset))).light_factor
            scores.append(_nonlinear_score(Z))
        return scores

    return _greedy_screen(data, "algo2-fast" if fast else "algo2", score_round)


def compare_methods(data: DataMatrix) -> list[IdealityReport]:
    """Run all four screen variants, capturing per-method failures."""
    runs = (
        ("algo1", lambda: screen_linear(data, fast=False)),
        ("algo1-fast", lambda: screen_linear(data, fast=True)),
        ("algo2", lambda: screen_nonlinear(data, fast=False)),
        ("algo2-fast", lambda: screen_nonlinear(data, fast=True)),
    )
    reports = []
    for tag, run in runs:
        try:
            reports.append(run())
        except PsidealError as exc:
            try:
                inds = indicators(data)
            except PsidealError:
                inds = None
            reports.append(
                IdealityReport(
                    method=tag,
                    indicators=inds,
                    kept=list(range(1, data.image_count + 1)),
                    breakdown=isinstance(exc, UnrecoverableBreakdownError)
                    or (inds.breakdown if inds else False),
                    error=str(exc),
                )
            )
    return reports
