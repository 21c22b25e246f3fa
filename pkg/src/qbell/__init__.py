"""Numerical toolkit for high-dimensional CGLMP Bell tests with OAM-entangled photon pairs."""

from __future__ import annotations

from .bell import (
    BellOperator,
    BellValue,
    ProbabilityTable,
    bell_operator,
    expectation_max_entangled,
    lhv_bound_bruteforce,
    max_violation,
    probability_table,
    s_from_table,
)
from .concentration import FilterSpec, apply_filter, completeness_certificate, design_filter
from .errors import (
    ContractError,
    FitError,
    InfeasibleError,
    QBellError,
    SizeError,
    UndefinedConstraintError,
    ZeroProbabilityError,
)
from .experiment import ExperimentPlan, estimate_s_with_sigma, run_sd_sweep, simulate_counts
from .modes import AnalyserSetting, DimensionSpec, analyser_state, mode_map
from .numerics import eig_hermitian, tensor_product
from .spdc import coincidence_closed_form, fit_gamma, lorentzian_state, max_entangled_state
from .witness import ConstraintSet, WitnessAnsatz, certify_dimension, maximize_s11, measured_scenario

__version__ = "0.1.0"
