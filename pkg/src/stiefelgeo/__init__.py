"""Numerical toolkit for the Stiefel manifold St(n, p) under the Euclidean metric.

Closed-form geodesics and their exponential map, a shooting logarithm,
Frenet-curvature analysis of geodesics viewed as space curves, detection of
closed geodesics via the constant-curvature normal form, and a batch
experiment harness that probes the injectivity radius numerically.
"""

__version__ = "0.1.0"

from .config import CONFIG_ENV_VAR, Config, DEFAULT_CONFIG
from .errors import (
    AmbiguityError,
    ConvergenceError,
    DegenerateCurveError,
    DimensionError,
    DomainError,
    NormalizationError,
    RankError,
    ResolutionError,
    StiefelGeoError,
    StructureError,
)
from .matcore import SkewSpectrum, expm, kron_sum, skew_spectrum, thin_qr
from .stiefel import (
    GeodesicCoeffs,
    GeodesicCurve,
    ShootingResult,
    StiefelPoint,
    TangentVector,
    geodesic_curve,
    geodesic_derivative_coeffs,
    geodesic_generator,
    kappa1_squared,
    log_shoot,
    metric_inner,
    project_point,
    project_tangent,
    random_point,
    random_tangent,
    split_tangent,
    stiefel_exp,
    stiefel_log,
    tangent_basis,
)
from .frenet import (
    CurvatureProfile,
    FrenetData,
    NormalForm,
    curvature_profile,
    frenet_from_derivatives,
    geodesic_frenet_curvatures,
    geodesic_loop_length,
    minimal_period,
    normal_form,
)
from .experiments import (
    ExperimentReport,
    closed_geodesic_search,
    curvature_bound_experiment,
    injectivity_probe,
    klingenberg_bound,
    make_closed_geodesic,
)
