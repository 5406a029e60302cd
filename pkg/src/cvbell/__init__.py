"""Multipartite continuous-variable Bell tests.

Evaluates functional-moment Bell observables for photonic multimode
superposition states under detector inefficiency and occupation-basis
decoherence, covering the optimized measurement function x/(1 + eps x^2),
plain homodyne moment correlations, and sign-binned Mermin-Klyshko variants,
together with the critical efficiency / purity threshold curves.
"""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    MonotonicityError,
    NumericalDomainError,
    ResourceLimitError,
)
from .quadrature import (
    DEFAULT_ORDER,
    QUICK_ORDER,
    GAUSS_NORM,
    KernelIntegrals,
    QuadratureRule,
    gauss_hermite_rule,
    integrate,
    kernel_integrals,
)
from .model import (
    AngleConfig,
    Basis,
    DensityMatrix,
    Identity,
    MeasurementFunction,
    Optimal,
    SignBin,
    StateSpec,
    density_matrix,
    single_mode_element,
    site_operator,
)
from .oracle import (
    BellResult,
    angle_scan,
    evaluate,
    optimize_epsilon_numeric,
    orthogonal_angles,
    random_product_mixture,
)
from .functional_bell import (
    EpsilonSolution,
    bell_value,
    cfrd_bell_value,
    ideal_epsilon,
    lossy_epsilon_map,
    solve_epsilon_even,
    solve_epsilon_odd,
)
from .mk_binning import (
    MKResult,
    mk_bell_value,
    mk_bell_value_product_form,
    mk_critical_product,
    mk_evaluate,
    mk_optimal_angles,
)
from .variational import (
    FreeFunction,
    euler_lagrange_residual,
    fit_optimal_epsilon,
    free_function_from,
    optimize_function,
)
from .critical import (
    AsymptoticProduct,
    CriticalCurve,
    asymptotic_product,
    bell_ratio,
    critical_curve,
    critical_efficiency,
    critical_purity,
    curve_to_csv_rows,
)

__all__ = [
    "__version__",
    "ConvergenceError", "MonotonicityError", "NumericalDomainError", "ResourceLimitError",
    "DEFAULT_ORDER", "QUICK_ORDER", "GAUSS_NORM",
    "KernelIntegrals", "QuadratureRule", "gauss_hermite_rule", "integrate",
    "kernel_integrals",
    "AngleConfig", "Basis", "DensityMatrix", "Identity", "MeasurementFunction",
    "Optimal", "SignBin", "StateSpec", "density_matrix", "single_mode_element",
    "site_operator",
    "BellResult", "angle_scan", "evaluate", "optimize_epsilon_numeric",
    "orthogonal_angles", "random_product_mixture",
    "EpsilonSolution", "bell_value", "cfrd_bell_value", "ideal_epsilon",
    "lossy_epsilon_map", "solve_epsilon_even", "solve_epsilon_odd",
    "MKResult", "mk_bell_value", "mk_bell_value_product_form",
    "mk_critical_product", "mk_evaluate", "mk_optimal_angles",
    "FreeFunction", "euler_lagrange_residual", "fit_optimal_epsilon",
    "free_function_from", "optimize_function",
    "AsymptoticProduct", "CriticalCurve", "asymptotic_product", "bell_ratio",
    "critical_curve", "critical_efficiency", "critical_purity", "curve_to_csv_rows",
]
