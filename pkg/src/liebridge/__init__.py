"""Brownian motion, guided bridges, and metric estimation on the rotation group.

The package simulates left-invariant Brownian motion on SO(3), conditions it
on hitting a target by guided bridge proposals with Girsanov log-weights,
estimates heat-kernel values by importance sampling, and recovers an unknown
metric from observed diffusion endpoints by iterative maximum likelihood.
"""

from .bridge import (
    BridgeSample,
    RadialBoundConfig,
    RadialBoundReport,
    check_radial_bound,
    guiding_term,
    log_phi_increment,
    radial_series,
    sample_guided_bridge,
    sample_guided_bridges,
)
from .density import EstimatorReport, estimate_heat_kernel, q_factor
from .errors import (
    ArgumentError,
    CutLocusError,
    DegenerateWeights,
    DomainError,
    HorizonError,
    LieBridgeError,
    NonFiniteLikelihood,
    NotSPDError,
    NumericalError,
)
from .group import (
    Frame,
    MetricTensor,
    distance,
    dlog_theta,
    frame_from_metric,
    group_exp,
    group_log,
    hat,
    jacobian_theta,
    project_to_group,
    vee,
)
from .mle import (
    MleConfig,
    MleTrace,
    ObservationSet,
    fd_gradient,
    fit_metric,
    log_likelihood,
    sample_observations,
)
from .sde import (
    IntegratorConfig,
    SamplePath,
    TimeGrid,
    euler_heun_step,
    gaussian_increments,
    sample_brownian_path,
    sample_brownian_paths,
    sample_brownian_endpoints,
    uniform_grid,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BridgeSample",
    "CutLocusError",
    "DegenerateWeights",
    "DomainError",
    "EstimatorReport",
    "Frame",
    "HorizonError",
    "IntegratorConfig",
    "LieBridgeError",
    "MetricTensor",
    "MleConfig",
    "MleTrace",
    "NonFiniteLikelihood",
    "NotSPDError",
    "NumericalError",
    "ObservationSet",
    "RadialBoundConfig",
    "RadialBoundReport",
    "SamplePath",
    "TimeGrid",
    "check_radial_bound",
    "distance",
    "dlog_theta",
    "estimate_heat_kernel",
    "euler_heun_step",
    "fd_gradient",
    "fit_metric",
    "frame_from_metric",
    "gaussian_increments",
    "group_exp",
    "group_log",
    "guiding_term",
    "hat",
    "jacobian_theta",
    "log_likelihood",
    "log_phi_increment",
    "project_to_group",
    "q_factor",
    "radial_series",
    "sample_brownian_endpoints",
    "sample_brownian_path",
    "sample_brownian_paths",
    "sample_guided_bridge",
    "sample_guided_bridges",
    "sample_observations",
    "uniform_grid",
    "vee",
    "__version__",
]
