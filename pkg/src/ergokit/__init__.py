"""ergokit: ergodicity classification and spectral-gap bounds for
birth-death chains and one-dimensional diffusions.

The package decides, with honest three-valued verdicts, whether a model
is unique / recurrent / ergodic / exponentially ergodic / strongly
ergodic, whether its generator has discrete spectrum, and whether the
logarithmic Sobolev or Nash inequalities can hold - all via explicit
series, suprema and integrals of the reversibility weights.  Around the
exponential-ergodicity quantity delta it computes certified two-sided
eigenvalue brackets [(4 delta)^-1, delta^-1], variational lower bounds
from test sequences/functions, and brute-force truncation oracles for
cross-validation.
"""

from .bd_criteria import (
    ClassificationReport,
    classify,
    discrete_spectrum,
    ergodicity,
    exponential_ergodicity,
    log_sobolev,
    mean_hitting_time,
    nash,
    recurrence,
    strong_ergodicity,
    uniqueness,
    verify_test_sequence,
)
from .bd_spectral import (
    GapEstimate,
    TestSequence,
    delta_bd,
    delta_verdict,
    gap_bounds_bd,
    representative_w,
    truncated_gap_oracle,
    variational_lower_bd,
)
from .diffusion import (
    C_of,
    DiffusionReport,
    criteria_diff,
    delta_diff,
    dirichlet_form,
    fd_gap_oracle,
    gap_bounds_diff,
    kac_krein_delta,
    mu_xy,
    representative_f,
    variational_lower_diff,
    variance_of,
)
from .eigensolver import TridiagonalMatrix, kth_eigenvalue, sturm_count
from .expr import EvalDomainError, ExprSyntaxError, RateExpression, parse_expr
from .ladder import Budget, MuLadder, Outcome, Verdict, series_verdict, sup_verdict
from .models import (
    BirthDeathModel,
    DiffusionModel,
    ModelFileError,
    PositivityError,
    load_model,
    parse_model_text,
)
from .quadrature import QuadratureResult, integrate, log_integrate

__version__ = "0.1.0"

__all__ = [
    "Budget", "MuLadder", "Outcome", "Verdict", "series_verdict", "sup_verdict",
    "BirthDeathModel", "DiffusionModel", "ModelFileError", "PositivityError",
    "load_model", "parse_model_text",
    "RateExpression", "parse_expr", "ExprSyntaxError", "EvalDomainError",
    "ClassificationReport", "classify", "uniqueness", "recurrence", "ergodicity",
    "exponential_ergodicity", "discrete_spectrum", "log_sobolev",
    "strong_ergodicity", "nash", "mean_hitting_time", "verify_test_sequence",
    "GapEstimate", "TestSequence", "delta_bd", "delta_verdict", "gap_bounds_bd",
    "representative_w", "variational_lower_bd", "truncated_gap_oracle",
    "TridiagonalMatrix", "sturm_count", "kth_eigenvalue",
    "QuadratureResult", "integrate", "log_integrate",
    "DiffusionReport", "criteria_diff", "C_of", "mu_xy", "delta_diff",
    "kac_krein_delta", "gap_bounds_diff", "representative_f",
    "variational_lower_diff", "dirichlet_form", "variance_of", "fd_gap_oracle",
    "__version__",
]
