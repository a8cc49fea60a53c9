"""Subset statistics, their aggregation over subset sizes, and the test decision.

The aggregated statistic ``T_n(k)`` sums the subset statistic over all
``C(d, k)`` index sets of size ``k``.  Since the subset statistic is
``(1/n) sum_{i,j} prod_{p in A} I^{(p)}_{ij}``, swapping the sums gives

    T_n(k) = (1/n) sum_{i,j} e_k(I^{(1)}_{ij}, ..., I^{(d)}_{ij})

with ``e_k`` the elementary symmetric polynomial.  ``t_statistic_fast``
evaluates all ``e_2..e_m`` per pair with the usual one-row recurrence, which
costs ``O(n^2 d m)`` instead of ``O(m n^2 d^m)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import combinations
from statistics import NormalDist

import numpy as np

from . import moments
from .errors import DegenerateVariance, InputError, InsufficientSample, SubsetBudgetExceeded
from .ranks_kernel import (
    DEFAULT_MEMORY_BUDGET,
    PairKernelTable,
    RankMatrix,
    TiePolicy,
    build_kernel_table,
    check_index_set,
    compute_ranks,
    kernel_column,
    pair_index,
    table_nbytes,
)

DEFAULT_SUBSET_BUDGET = 1_000_000


class ScalingMode(enum.Enum):
    """How ``T_n(k) - nu_n(k)`` is scaled.

    ``EXACT`` uses the finite-sample null variance for every ``k``,
    ``ASYMPTOTIC`` its limit ``2/90^k``, and ``PAPER`` the exact variance
    for ``k <= 3`` and the limit beyond.
    """

    EXACT = "exact"
    ASYMPTOTIC = "asymptotic"
    PAPER = "paper"

    def resolve(self, k: int) -> "ScalingMode":
        if self is ScalingMode.PAPER:
            return ScalingMode.EXACT if k <= 3 else ScalingMode.ASYMPTOTIC
        return self


def _require_raw(table: PairKernelTable):
    if table.centered:
        raise InputError("statistics are defined on the raw (uncentered) kernel table")


def subset_statistic(table: PairKernelTable, A) -> float:
    _require_raw(table)
    A = check_index_set(A, table.d)
    _, _, weights = pair_index(table.n)
    prod = np.prod(table.values[list(A)], axis=0)
    return float(weights @ prod) / table.n


def t_statistic_naive(table: PairKernelTable, k: int, subset_budget: int = DEFAULT_SUBSET_BUDGET) -> float:
    """Sum of subset statistics over all size-``k`` sets, in lexicographic order."""
    _require_raw(table)
    d = table.d
    if not 2 <= k <= d:
        raise InputError(f"need 2 <= k <= d, got k={k}, d={d}")
    count = math.comb(d, k)
    if count > subset_budget:
        raise SubsetBudgetExceeded(f"C({d},{k}) = {count} subsets exceed budget {subset_budget}")
    return sum(subset_statistic(table, A) for A in combinations(range(d), k))


def _esp_rows(columns, size: int, m: int) -> np.ndarray:
    """``e_0..e_m`` of the per-pair kernel values, one column at a time."""
    e = np.zeros((m + 1, size))
    e[0] = 1.0
    for x in columns:
        for k in range(m, 0, -1):
            e[k] += x * e[k - 1]
    return e


def t_statistic_fast(source: PairKernelTable | RankMatrix, m: int) -> np.ndarray:
    """``[T_n(2), ..., T_n(m)]`` via elementary symmetric polynomials.

    ``source`` is either a raw kernel table or a rank matrix; in the latter
    case kernel columns are generated on the fly, so memory stays at
    ``O(n^2 m)`` whatever ``d`` is.
    """
    if isinstance(source, PairKernelTable):
        _require_raw(source)
        n, d = source.n, source.d
        columns = iter(source.values)
    else:
        n, d = source.n, source.d
        columns = (kernel_column(source.ranks[:, p]) for p in range(d))
    if not 2 <= m <= d:
        raise InputError(f"need 2 <= m <= d, got m={m}, d={d}")
    _, _, weights = pair_index(n)
    e = _esp_rows(columns, weights.shape[0], m)
    return (e[2:] @ weights) / n


def mu_n(n: int, k: int) -> float:
    return float(moments.mu_exact(n, k))


def sigma2_exact(n: int, k: int):
    """Exact null variance of one subset statistic, as a Fraction (0 at n = 2)."""
    if n < 2 or k < 2:
        raise InputError(f"need n >= 2 and k >= 2, got n={n}, k={k}")
    return moments.sigma2_exact(n, k)


def binom(d: int, k: int) -> float:
    # Python integers are exact at any size; only the final conversion rounds
    return float(math.comb(d, k))


@dataclass(frozen=True)
class Scale:
    nu: float
    delta: float


@lru_cache(maxsize=4096)
def scaling(n: int, d: int, k: int, mode: ScalingMode | str = ScalingMode.EXACT) -> Scale:
    mode = ScalingMode(mode).resolve(k)
    if not 2 <= k <= d:
        raise InputError(f"need 2 <= k <= d, got k={k}, d={d}")
    c = binom(d, k)
    nu = c * mu_n(n, k)
    if mode is ScalingMode.ASYMPTOTIC:
        var = 2.0 / 90.0**k
    else:
        var = float(sigma2_exact(n, k))
        if var <= 0.0:
            raise DegenerateVariance(f"null variance is {var} at n={n}, k={k}")
    return Scale(nu=nu, delta=math.sqrt(var * c))


def standardize(t: np.ndarray, n: int, d: int, mode: ScalingMode | str) -> np.ndarray:
    """``z_k = (T_n(k) - nu_n(k)) / delta_n(k)`` for ``k = 2, 3, ...``."""
    out = np.empty(len(t))
    for idx, tk in enumerate(t):
        s = scaling(n, d, idx + 2, ScalingMode(mode))
        out[idx] = (tk - s.nu) / s.delta
    return out


def combined_statistic(z, m: int | None = None) -> float:
    z = np.asarray(z, dtype=float)
    if m is not None and len(z) != m - 1:
        raise InputError(f"expected {m - 1} standardized values, got {len(z)}")
    if len(z) == 0 or not np.all(np.isfinite(z)):
        raise InputError("standardized values must be finite and non-empty")
    return float(z.sum() / math.sqrt(len(z)))


def normal_quantile(level: float) -> float:
    return NormalDist().inv_cdf(level)


def p_value(z: float) -> float:
    """Upper-tail standard normal probability ``1 - Phi(z)``."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def decide(z: float, alpha: float = 0.05) -> bool:
    """Reject iff ``z`` strictly exceeds the ``1 - alpha`` normal quantile."""
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    return bool(z > normal_quantile(1.0 - alpha))


@dataclass
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    n: int
    d: int
    m: int
    t: list[float]
    nu: list[float]
    scale: list[float]
    z: list[float]
    t_bar: float
    p_value: float
    alpha: float
    reject: bool
    scaling: str
    meta: dict = field(default_factory=dict)

    @property
    def orders(self) -> list[int]:
        return list(range(2, self.m + 1))

    def to_dict(self) -> dict:
        return asdict(self)


def run_test(
    data,
    m: int = 2,
    mode: ScalingMode | str = ScalingMode.EXACT,
    alpha: float = 0.05,
    tie_policy: TiePolicy | str = TiePolicy.ERROR,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> TestReport:
    """Full pipeline from raw observations to a decision on ``H_m``."""
    mode = ScalingMode(mode)
    ranks = compute_ranks(data, tie_policy)
    n, d = ranks.n, ranks.d
    if not 2 <= m <= d:
        raise InputError(f"need 2 <= m <= d, got m={m}, d={d}")
    if n < 3:
        raise InsufficientSample(f"n={n}: the statistic is deterministic, every null variance vanishes")
    if table_nbytes(n, d) <= memory_budget:
        t = t_statistic_fast(build_kernel_table(ranks, memory_budget=memory_budget), m)
        path = "table"
    else:
        t = t_statistic_fast(ranks, m)
        path = "streaming"
    try:
        scales = [scaling(n, d, k, mode) for k in range(2, m + 1)]
    except DegenerateVariance as exc:
        raise InsufficientSample(str(exc)) from exc
    z = [(tk - s.nu) / s.delta for tk, s in zip(t, scales)]
    t_bar = combined_statistic(z, m)
    return TestReport(
        n=n,
        d=d,
        m=m,
        t=[float(v) for v in t],
        nu=[s.nu for s in scales],
        scale=[s.delta for s in scales],
        z=[float(v) for v in z],
        t_bar=t_bar,
        p_value=p_value(t_bar),
        alpha=alpha,
        reject=decide(t_bar, alpha),
        scaling=mode.value,
        meta={"tie_policy": TiePolicy(tie_policy).value, "ties_broken": bool(ranks.tie_flags.any()), "path": path},
    )
