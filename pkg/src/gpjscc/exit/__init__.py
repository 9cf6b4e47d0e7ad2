"""EXIT-chart machinery and threshold algorithms."""
from __future__ import annotations

from .chart import export_exit_chart, chart_gap, sgp_inner_curve, sgp_outer_curve
from .engine import ExitState, run_batch
from .jfunc import j_bsc, j_fun, j_inv, get_jmodel
from .threshold import (
    ThresholdConfig,
    ThresholdResult,
    channel_config,
    channel_threshold,
    channel_thresholds_batch,
    pexit_iterate,
    shannon_limit_db,
    source_config,
    source_threshold,
    source_thresholds_batch,
)

__all__ = [
    "ExitState",
    "ThresholdConfig",
    "ThresholdResult",
    "channel_config",
    "channel_threshold",
    "channel_thresholds_batch",
    "chart_gap",
    "export_exit_chart",
    "get_jmodel",
    "j_bsc",
    "j_fun",
    "j_inv",
    "pexit_iterate",
    "run_batch",
    "sgp_inner_curve",
    "sgp_outer_curve",
    "shannon_limit_db",
    "source_config",
    "source_threshold",
    "source_thresholds_batch",
]
