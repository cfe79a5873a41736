"""Stein kernel cubature on the sphere S^2.

Build a Stein kernel ``k_P`` from a radial kernel and an unnormalised
target, solve for cubature weights on a point set, and read off the
integral estimate together with its worst-case error (the kernel Stein
discrepancy).

>>> import geostein as gs
>>> target = gs.VonMisesFisher([0.0, 0.0, 2.0])
>>> X = gs.fibonacci_points(100)
>>> K = gs.assemble_KP(gs.SteinOperatorConfig(target), gs.profile_k1(3.5), X)
>>> res = gs.solve_weights(K)
>>> round(float(res.weights.sum()), 12)
1.0
"""

from .cubature import (
    CubatureResult,
    SigmaEstimatorConfig,
    integrate,
    integrate_sigma,
    ksd_of_weights,
    solve_weights,
)
from .errors import (
    ChartDomainError,
    ConfigError,
    DegenerateSystem,
    DuplicatePoints,
    EmptyPointSet,
    FactorizationFailure,
    GeosteinError,
    InsufficientData,
    InvalidSmoothness,
    LengthMismatch,
    SeriesDivergence,
    UnknownIntegrand,
    UnsupportedSmoothness,
    UnsupportedTarget,
)
from .experiments import (
    ConvergenceRecord,
    ExperimentConfig,
    default_integrand,
    fit_rate,
    interpolant,
    run_convergence,
    summarize,
)
from .kernels import (
    RadialProfile,
    SchoenbergDiagnostic,
    parse_kernel,
    profile_k1,
    profile_k2,
    profile_k3,
    schoenberg_coefficients,
)
from .points import (
    ChainDiagnostics,
    RngSeed,
    fibonacci_points,
    iid_uniform,
    mh_chain,
    riesz_minimize,
)
from .quadrature import (
    ProductGrid,
    product_grid,
    reference_expectation,
    reference_integral,
    stein_identity_residual,
)
from .sphere import (
    ChartFrame,
    ChartPoint,
    UnitVector3,
    chart_frame,
    estimate_fill_distance,
    from_chart,
    geodesic_distance,
    read_points,
    to_chart,
    write_points,
)
from .stein import (
    OperatorVariant,
    SteinKernelMatrix,
    SteinOperatorConfig,
    TestFunction,
    apply_tau_ambient,
    apply_tau_chart,
    assemble_KP,
    stein_kernel,
    stein_kernel_fd,
    stein_kernel_matrix,
    tau_x_kernel,
)
from .targets import TargetDensity, VonMisesFisher, parse_target

__version__ = "0.1.0"
