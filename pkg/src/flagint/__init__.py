"""Numerics for fractional integration along flag kernels.

Exact rational bookkeeping for the exponent conditions, a singularity-aware
quadrature engine for the convolution operator, atom construction and
validation, and the scan experiments behind the boundedness frontier.
"""

from .errors import (
    AccuracyError,
    ConfigIncompleteError,
    ExponentRangeError,
    FitWindowError,
    FlagIntError,
    PreconditionError,
    RegionError,
    SingularityError,
    UsageError,
)
from .exponents import (
    DerivedExponents,
    ExponentConfig,
    as_rational,
    check_formula_one,
    check_formula_two,
    derive_ab,
    heisenberg_map,
    strict_consequences,
)
from .kernel import (
    FlagKernel,
    PointPair,
    dominating_kernel_eval,
    gradient_bound_ratio,
    gradient_bound_ratios_split,
    gradient_oracle_norm,
    kernel_eval,
    point_pair,
    product_kernel_points,
)
from .domain import (
    CounterexampleRegion,
    Cube,
    GapRegion,
    Shell,
    ShellCase,
    Window,
    ball_volume,
    centered_window,
    shell_case,
    shell_contains,
    shell_family,
)
from .quadrature import (
    QuadratureSpec,
    TestFunction,
    apply_dominating_operator,
    apply_operator,
    apply_riesz_1d,
    indicator_box,
    lp_norm,
    lq_mass,
    lq_mass_dominating,
    piecewise_constant,
    smooth_bump,
    sufficient_inner_cutoff,
)
from .atoms import (
    Atom,
    AtomReport,
    atom_from_json,
    atom_to_json,
    make_random_atom,
    make_signum_atom,
    noncancelling_counterpart,
    signum_atom_at_scale,
    validate_atom,
)
from .experiments import (
    DecayFit,
    HlsReport,
    ScanResult,
    counterexample_growth,
    dilation_scan,
    fit_loglog,
    frontier_map,
    hls_iteration_check,
    shell_decay_profile,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "Atom",
    "AtomReport",
    "ConfigIncompleteError",
    "CounterexampleRegion",
    "Cube",
    "DecayFit",
    "DerivedExponents",
    "ExponentConfig",
    "ExponentRangeError",
    "FitWindowError",
    "FlagIntError",
    "FlagKernel",
    "GapRegion",
    "HlsReport",
    "PointPair",
    "PreconditionError",
    "QuadratureSpec",
    "RegionError",
    "ScanResult",
    "Shell",
    "ShellCase",
    "SingularityError",
    "TestFunction",
    "UsageError",
    "Window",
    "apply_dominating_operator",
    "apply_operator",
    "apply_riesz_1d",
    "as_rational",
    "atom_from_json",
    "atom_to_json",
    "ball_volume",
    "centered_window",
    "check_formula_one",
    "check_formula_two",
    "counterexample_growth",
    "derive_ab",
    "dilation_scan",
    "dominating_kernel_eval",
    "fit_loglog",
    "frontier_map",
    "gradient_bound_ratio",
    "gradient_bound_ratios_split",
    "gradient_oracle_norm",
    "heisenberg_map",
    "hls_iteration_check",
    "indicator_box",
    "kernel_eval",
    "lp_norm",
    "lq_mass",
    "lq_mass_dominating",
    "make_random_atom",
    "make_signum_atom",
    "noncancelling_counterpart",
    "piecewise_constant",
    "point_pair",
    "product_kernel_points",
    "shell_case",
    "shell_contains",
    "shell_decay_profile",
    "shell_family",
    "signum_atom_at_scale",
    "smooth_bump",
    "sufficient_inner_cutoff",
    "validate_atom",
]
