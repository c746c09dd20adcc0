"""Twin-kernel intensity estimation for censored counting-process data."""
from .errors import (
    AtRiskZero,
    EmptySample,
    GridTooCoarse,
    InsufficientPoints,
    OutOfDomain,
    SingularMomentMatrix,
    TwinKernelError,
)
from .estimator import (
    LITERAL,
    ORBIT_AVERAGED,
    ORBIT_POOLED,
    EstimatorConfig,
    IntensityEstimate,
    SelectionResult,
    ci_band,
    contrast,
    estimate_level,
    level_profiles,
    pointwise_ci,
    ramlau_hansen,
    select_level,
    twin_kernel_weight,
)
from .group import GroupAction, dyadic_scale, identity, make_action, periodic_shift
from .kernels import (
    EPANECHNIKOV,
    TRIANGULAR,
    UNIFORM,
    BandwidthLadder,
    KernelSpec,
    equivalent_kernel,
    get_kernel,
)
from .local_poly import LocPolyConfig, locpoly_estimate, locpoly_select_level, smoothing_functional
from .process import EventSample, at_risk, compensator_residual, nelson_aalen, parse_csv, read_csv
from .sim import (
    METHODS,
    BenchmarkSettings,
    MethodSpec,
    ScenarioSpec,
    run_benchmark,
    simulate_sample,
    true_intensity,
)

__version__ = "0.1.0"
