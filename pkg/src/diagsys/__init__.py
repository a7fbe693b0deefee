"""Diagonal Diophantine systems: degree profiles, variable bounds, exact counts,
exponential sums and circle-method densities."""

from .bounds import (BoundReport, MeanValuePlugin, PluginRegistry, kncor_bounds, quadcub_bounds,
                     theorem1_bounds, u0_estimate, v0_estimate)
from .counting import (BlockPartition, CountCache, CountResult, RangeSpec, count_solutions,
                       enumerate_range, mean_value_I, mean_value_J, slope_estimate)
from .densities import (DensityReport, DepthPolicy, LocalDensity, chi_inf, chi_p, count_mod,
                        predicted_constant, singular_series)
from .expsums import (ArcParams, classify_arc, complete_sum_S, dickman_rho, f_eval,
                      gamma_transform, sqa_bound_scan, v_integral, weyl_diagnostic)
from .pipeline import VerifyPlan, VerifyReport, emit_report, run_verify
from .system_model import (AdditiveSystem, BudgetExceeded, DegreeProfile, NonSingularityReport,
                           SystemFormatError, check_highly_nonsingular, derive_profile,
                           parse_system, serialize_system)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "MeanValuePlugin",
    "PluginRegistry",
    "kncor_bounds",
    "quadcub_bounds",
    "theorem1_bounds",
    "u0_estimate",
    "v0_estimate",
    "BlockPartition",
    "CountCache",
    "CountResult",
    "RangeSpec",
    "count_solutions",
    "enumerate_range",
    "mean_value_I",
    "mean_value_J",
    "slope_estimate",
    "DensityReport",
    "DepthPolicy",
    "LocalDensity",
    "chi_inf",
    "chi_p",
    "count_mod",
    "predicted_constant",
    "singular_series",
    "ArcParams",
    "classify_arc",
    "complete_sum_S",
    "dickman_rho",
    "f_eval",
    "gamma_transform",
    "sqa_bound_scan",
    "v_integral",
    "weyl_diagnostic",
    "VerifyPlan",
    "VerifyReport",
    "emit_report",
    "run_verify",
    "AdditiveSystem",
    "BudgetExceeded",
    "DegreeProfile",
    "NonSingularityReport",
    "SystemFormatError",
    "check_highly_nonsingular",
    "derive_profile",
    "parse_system",
    "serialize_system",
]
