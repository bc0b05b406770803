"""Photometric-stereo toolkit: uncalibrated light estimation, dataset
ideality screening, and surface reconstruction."""

from .errors import (
    BreakdownError,
    DegenerateDataError,
    DivergenceError,
    InvalidFieldError,
    InvalidSpecError,
    ManifestError,
    PsidealError,
    RankDeficientLightsError,
    ShapeError,
    TooFewImagesError,
    UnderdeterminedError,
    UndefinedMetricError,
    UnknownSurfaceError,
    UnrecoverableBreakdownError,
)
from .integration import (
    GradientField,
    gradients_from_normals,
    heights_from_normals,
    integrate_poisson,
    relative_error_inf,
)
from .linear import (
    AlignedEstimate,
    GramCandidate,
    LinearEstimate,
    Rank3Factorization,
    align_estimate,
    align_lights,
    cholesky_factor,
    estimate_lights_linear,
    gram_design_matrix,
    rank3_factor,
    solve_gram,
)
from .model import (
    DataMatrix,
    GridSpec,
    LightSet,
    NormalAlbedoField,
    SurfaceGrid,
    normals_from_gradient,
    normals_from_lights,
    render_lambertian,
)
from .nonlinear import (
    GNResult,
    NonlinearEstimate,
    estimate_lights_nonlinear,
    eta_indicator,
    gauss_newton_solve,
)
from .screening import (
    DatasetIndicators,
    IdealityReport,
    compare_methods,
    indicators,
    screen_linear,
    screen_nonlinear,
)
from .synth import (
    Corruption,
    SyntheticScenario,
    builtin_surface,
    default_nine_lights,
    generate_dataset,
)

__version__ = "0.1.0"
