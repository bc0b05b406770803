"""Exception types shared across the package."""


class PsidealError(Exception):
    """Base class for all errors raised by psideal."""


class InvalidSpecError(PsidealError):
    """Grid specification is degenerate or inconsistent."""


class InvalidFieldError(PsidealError):
    """A per-pixel field (normals, gradients, heights) is malformed."""


class ShapeError(PsidealError):
    """Array dimensions do not match between coupled inputs."""


class TooFewImagesError(PsidealError):
    """The operation needs more images than the dataset provides."""


class RankDeficientLightsError(PsidealError):
    """Known light directions do not span 3-space."""


class UnderdeterminedError(PsidealError):
    """Fewer than six images: the quadratic-constraint system has no unique solution."""


class DegenerateDataError(PsidealError):
    """Data matrix carries no signal (all singular values zero)."""


class UnknownSurfaceError(PsidealError):
    """Requested builtin surface name is not registered."""


class UndefinedMetricError(PsidealError):
    """Error metric is undefined (zero reference surface)."""


class ManifestError(PsidealError):
    """Dataset manifest is invalid or references inconsistent images."""


class BreakdownError(PsidealError):
    """Gram matrix is not positive definite; triangular recovery is impossible.

    Carries the smallest eigenvalue so callers can report how far from
    feasible the dataset is.
    """

    def __init__(self, min_eigenvalue, message=None):
        self.min_eigenvalue = float(min_eigenvalue)
        if message is None:
            message = (
                "gram matrix is not positive definite "
                f"(smallest eigenvalue {self.min_eigenvalue!r})"
            )
        super().__init__(message)


class UnrecoverableBreakdownError(PsidealError):
    """No single-image removal yields a positive-definite Gram matrix."""

    def __init__(self, best_eigenvalue):
        self.best_eigenvalue = float(best_eigenvalue)
        super().__init__(
            "Stop iteration: unrecoverable breakdown "
            f"(best candidate eigenvalue {self.best_eigenvalue!r})"
        )


class DivergenceError(PsidealError):
    """Iterative solver produced a non-finite iterate.

    The last computed Jacobian singular values and rank-gap ratio are
    attached so screening can still score the candidate.
    """

    def __init__(self, singular_values, rank_gap):
        self.singular_values = singular_values
        self.rank_gap = float(rank_gap)
        super().__init__("iteration diverged to a non-finite iterate")
