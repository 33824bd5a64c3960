"""Order-based multivariate regression by maximizing row-wise rank concordance."""
__version__ = "0.1.0"

from .core import (
    CoefficientMatrix,
    DataSet,
    ObjectiveValue,
    average_row_kendall,
    canonicalize,
    concordance_objective,
    concordant_pairs,
    kendall_tau,
    row_kendall,
    row_ordering,
)
from .errors import *  # noqa: F401,F403
from .solver import CVResult, FitConfig, FitResult, cross_validate_lambda, fit, predict, sweep
from .stepmax import (
    StepSumProblem,
    StepSumSolution,
    brute_force_step_sum,
    maximize_step_sum,
    maximize_step_sum_l0,
)
