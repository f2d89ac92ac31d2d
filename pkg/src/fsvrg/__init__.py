"""Variance-reduced stochastic gradient solvers with momentum acceleration.

The package provides LIBSVM-style dataset handling, composite regularized
ERM objectives, momentum/epoch schedules, a family of epoch-structured
stochastic solvers, empirical diagnostics for their convergence claims,
sklearn-style estimators, and a CLI benchmark harness.
"""

from .datasets import (
    Dataset,
    SparseExample,
    normalize_rows,
    parse_libsvm,
    subsample,
    synth_linear,
    to_libsvm,
)
from .estimators import ERMClassifier, ERMRegressor
from .objectives import (
    HingeLoss,
    LogisticLoss,
    Objective,
    Regularizer,
    SquaredLoss,
    loss_by_name,
    make_objective,
)
from .schedules import (
    ThetaSchedule,
    epoch_sizes,
    minibatch_variance_factor,
    theta_nsc_init,
    theta_nsc_next,
    theta_sc_optimal,
)
from .solvers import (
    ALGORITHMS,
    IterateState,
    RunResult,
    SolverConfig,
    TraceRecord,
    init_state,
    run,
    vr_gradient,
    vr_subgradient,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "Dataset",
    "ERMClassifier",
    "ERMRegressor",
    "HingeLoss",
    "IterateState",
    "LogisticLoss",
    "Objective",
    "Regularizer",
    "RunResult",
    "SolverConfig",
    "SparseExample",
    "SquaredLoss",
    "ThetaSchedule",
    "TraceRecord",
    "epoch_sizes",
    "init_state",
    "loss_by_name",
    "make_objective",
    "minibatch_variance_factor",
    "normalize_rows",
    "parse_libsvm",
    "run",
    "subsample",
    "synth_linear",
    "theta_nsc_init",
    "theta_nsc_next",
    "theta_sc_optimal",
    "to_libsvm",
    "vr_gradient",
    "vr_subgradient",
]
