"""Wave-equation moment functionals, regime arithmetic and test functions."""

from .functionals import (
    CherryMoments,
    ScanRecord,
    SplitTerms,
    cherry_moment_ia,
    cherry_moment_ib,
    decay_bound,
    decay_profile,
    divergence_functional,
    divergence_functional_with_error,
    divergence_split,
    kh_double_integral,
    kh_weight,
    recov_decay_probe,
    threshold_scan,
)
from .regimes import (
    ConeCd,
    HPrime,
    RegimeLabel,
    WeightKind,
    WeightSpec,
    classify_regime,
    regular_threshold,
    reparametrize_h_prime,
    valid_exponent_range,
    wick_threshold,
)
from .test_functions import ClassETestFunction, SpatialBump

__all__ = [
    "CherryMoments",
    "ClassETestFunction",
    "ConeCd",
    "HPrime",
    "RegimeLabel",
    "ScanRecord",
    "SpatialBump",
    "SplitTerms",
    "WeightKind",
    "WeightSpec",
    "cherry_moment_ia",
    "cherry_moment_ib",
    "classify_regime",
    "decay_bound",
    "decay_profile",
    "divergence_functional",
    "divergence_functional_with_error",
    "divergence_split",
    "kh_double_integral",
    "kh_weight",
    "recov_decay_probe",
    "regular_threshold",
    "reparametrize_h_prime",
    "threshold_scan",
    "valid_exponent_range",
    "wick_threshold",
]
