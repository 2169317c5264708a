from .objectives import BoundaryLossConfig, boundary_f1_per_class, boundary_loss, weighted_cross_entropy
from .search import (
    ParamScale,
    ParamSpec,
    SearchSpace,
    SearchStrategy,
    TpeProposer,
    TrialRecord,
    TrialStatus,
    TuneResult,
    crf_params_from_trial,
    tune,
    write_trial_log,
)

__all__ = [
    "BoundaryLossConfig",
    "ParamScale",
    "ParamSpec",
    "SearchSpace",
    "SearchStrategy",
    "TpeProposer",
    "TrialRecord",
    "TrialStatus",
    "TuneResult",
    "boundary_f1_per_class",
    "boundary_loss",
    "crf_params_from_trial",
    "tune",
    "weighted_cross_entropy",
    "write_trial_log",
]
