"""Representative multi-site sampling and downstream fairness analysis."""

from ._core import (
    __version__,
    auc,
    distance,
    expected_unfairness,
    group_report,
    monte_carlo_unfairness,
    response_weight,
    sample_bounds,
    simulate,
    tpr_tnr,
    zero_unfairness_ratio,
)

__all__ = [
    "__version__",
    "auc",
    "distance",
    "expected_unfairness",
    "group_report",
    "monte_carlo_unfairness",
    "response_weight",
    "sample_bounds",
    "simulate",
    "tpr_tnr",
    "zero_unfairness_ratio",
]
