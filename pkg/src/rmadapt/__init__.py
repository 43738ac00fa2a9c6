"""Robbins-Monro scale tuning for random-walk Metropolis-Hastings samplers."""
__version__ = "0.1.0"

from .numerics import DecompositionError, RngStream  # noqa: E402
from .dists import TargetFamilySpec, TargetModel, make_target  # noqa: E402
from .rm import RmConfig, RmSearchState, init_state, rm_step, steplength  # noqa: E402
from .adaptcov import CovarianceTracker  # noqa: E402
from .samplers import (  # noqa: E402
    Block, ChainTrace, GibbsBlockSpec, run_multivariate, run_mwg, run_univariate_tuned,
)
from .oracle import BracketError, ratio_curve, solve_sigma_star  # noqa: E402
from .diagnostics import act, asd, summarize  # noqa: E402

__all__ = [
    "Block", "BracketError", "ChainTrace", "CovarianceTracker", "DecompositionError",
    "GibbsBlockSpec", "RmConfig", "RmSearchState", "RngStream", "TargetFamilySpec",
    "TargetModel", "act", "asd", "init_state", "make_target", "ratio_curve", "rm_step",
    "run_multivariate", "run_mwg", "run_univariate_tuned", "solve_sigma_star", "steplength",
    "summarize",
]
