"""Rank-based tests for k-wise independence of high-dimensional samples."""

from .errors import HidimError
from .harness import ExperimentConfig, RejectionTable, TestSpec, emit_table, preset, run_experiment, simulate_null
from .models import Model, ModelSpec, RngStream, generate
from .moments import moment_closed_form, verify_catalog
from .ranks_kernel import Dataset, PairKernelTable, RankMatrix, TiePolicy, build_kernel_table, compute_ranks
from .statistics import (
    ScalingMode,
    TestReport,
    combined_statistic,
    decide,
    p_value,
    run_test,
    scaling,
    subset_statistic,
    t_statistic_fast,
    t_statistic_naive,
)

__version__ = "0.1.0"
