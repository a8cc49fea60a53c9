"""Column-wise max-ranks and the pairwise kernels every statistic is built from.

For a column of ranks ``R_1, ..., R_n`` the raw kernel is

    I(i, j) = (2n+1)/(6n) + R_i(R_i-1)/(2n(n+1)) + R_j(R_j-1)/(2n(n+1)) - max(R_i, R_j)/(n+1)

and the centered kernel subtracts its null expectation, which is
``1/6 - 1/(6n)`` on the diagonal and ``-1/(6n)`` off it.  Kernel tables are
stored per column in packed upper-triangular form (``i <= j``), so the
double sum over ordered pairs becomes a weighted sum with weight 2 for the
off-diagonal entries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import BadIndexSet, CapacityExceeded, InputError, InvalidRank, NonFinite, TiesPresent

DEFAULT_MEMORY_BUDGET = 2 * 1024**3  # bytes


class TiePolicy(enum.Enum):
    ERROR = "error"
    BY_ROW_INDEX = "by-index"


@dataclass(frozen=True)
class Dataset:
    """An ``n x d`` matrix of finite observations (rows are samples)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise InputError(f"expected a 2-d array, got shape {values.shape}")
        n, d = values.shape
        if n < 2 or d < 2:
            raise InputError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
        if not np.all(np.isfinite(values)):
            raise NonFinite("data contain NaN or infinite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RankMatrix:
    """Column-wise max-ranks in ``1..n``; each column is a permutation."""

    ranks: np.ndarray
    tie_flags: np.ndarray = field(default=None)

    def __post_init__(self):
        ranks = np.array(self.ranks, dtype=np.int64, copy=True)
        if ranks.ndim != 2:
            raise InputError(f"expected a 2-d rank array, got shape {ranks.shape}")
        n = ranks.shape[0]
        expected = np.arange(1, n + 1)
        if not np.all(np.sort(ranks, axis=0) == expected[:, None]):
            raise InvalidRank("every rank column must be a permutation of 1..n")
        ranks.setflags(write=False)
        object.__setattr__(self, "ranks", ranks)
        flags = self.tie_flags
        flags = np.zeros(ranks.shape[1], dtype=bool) if flags is None else np.array(flags, dtype=bool)
        flags.setflags(write=False)
        object.__setattr__(self, "tie_flags", flags)

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def d(self) -> int:
        return self.ranks.shape[1]

    def pseudo_observations(self) -> np.ndarray:
        return self.ranks / (self.n + 1.0)


def compute_ranks(data, tie_policy: TiePolicy | str = TiePolicy.ERROR) -> RankMatrix:
    """Max-ranks ``R_ip = #{j : X_jp <= X_ip}`` of every column.

    Under ``TiePolicy.BY_ROW_INDEX`` tied entries receive consecutive ranks
    in increasing row order and the column is flagged.
    """
    tie_policy = TiePolicy(tie_policy)
    if not isinstance(data, Dataset):
        data = Dataset(data)
    x = data.values
    n, d = x.shape
    order = np.argsort(x, axis=0, kind="stable")
    ranks = np.empty((n, d), dtype=np.int64)
    np.put_along_axis(ranks, order, np.arange(1, n + 1)[:, None], axis=0)
    sorted_x = np.take_along_axis(x, order, axis=0)
    ties = np.any(sorted_x[1:] == sorted_x[:-1], axis=0)
    if tie_policy is TiePolicy.ERROR and ties.any():
        cols = np.flatnonzero(ties).tolist()
        raise TiesPresent(f"tied values in column(s) {cols}; use the by-index tie policy to break them")
    return RankMatrix(ranks, tie_flags=ties)


def _check_rank(r, n):
    if n < 2:
        raise InputError(f"n must be >= 2, got {n}")
    if not 1 <= r <= n:
        raise InvalidRank(f"rank {r} outside 1..{n}")


def kernel_raw(r_i: int, r_j: int, n: int, exact: bool = False):
    """Raw kernel value for one column; ``exact=True`` returns a Fraction."""
    _check_rank(r_i, n)
    _check_rank(r_j, n)
    if exact:
        return (
            Fraction(2 * n + 1, 6 * n)
            + Fraction(r_i * (r_i - 1), 2 * n * (n + 1))
            + Fraction(r_j * (r_j - 1), 2 * n * (n + 1))
            - Fraction(max(r_i, r_j), n + 1)
        )
    return (
        (2 * n + 1) / (6 * n)
        + r_i * (r_i - 1) / (2 * n * (n + 1))
        + r_j * (r_j - 1) / (2 * n * (n + 1))
        - max(r_i, r_j) / (n + 1)
    )


def kernel_mean(n: int, diagonal: bool, exact: bool = False):
    """Null expectation of the raw kernel (valid for any dependence)."""
    if exact:
        return Fraction(1, 6) - Fraction(1, 6 * n) if diagonal else Fraction(-1, 6 * n)
    return 1 / 6 - 1 / (6 * n) if diagonal else -1 / (6 * n)


def kernel_centered(r_i: int, r_j: int, n: int, diagonal: bool, exact: bool = False):
    return kernel_raw(r_i, r_j, n, exact) - kernel_mean(n, diagonal, exact)


@lru_cache(maxsize=64)
def pair_index(n: int):
    """Packed upper-triangle indices ``(iu, ju)`` and double-sum weights."""
    iu, ju = np.triu_indices(n)
    weights = np.where(iu == ju, 1.0, 2.0)
    for arr in (iu, ju, weights):
        arr.setflags(write=False)
    return iu, ju, weights


def kernel_column(ranks_col: np.ndarray, centered: bool = False) -> np.ndarray:
    """Packed kernel values of one rank column, in ``pair_index`` order."""
    r = np.asarray(ranks_col, dtype=float)
    n = r.shape[0]
    iu, ju, _ = pair_index(n)
    quad = r * (r - 1.0) / (2.0 * n * (n + 1.0))
    vals = (2 * n + 1) / (6.0 * n) + quad[iu] + quad[ju] - np.maximum(r[iu], r[ju]) / (n + 1.0)
    if centered:
        vals -= np.where(iu == ju, 1 / 6 - 1 / (6 * n), -1 / (6 * n))
    return vals


@dataclass(frozen=True)
class PairKernelTable:
    """Per-column kernel values for all pairs ``i <= j``, shape ``(d, n(n+1)/2)``."""

    n: int
    values: np.ndarray
    centered: bool = False

    @property
    def d(self) -> int:
        return self.values.shape[0]

    def value(self, i: int, j: int, p: int) -> float:
        if i > j:
            i, j = j, i
        # row-major packed offset of (i, j) in the upper triangle
        k = i * self.n - i * (i - 1) // 2 + (j - i)
        return float(self.values[p, k])

    def matrix(self, p: int) -> np.ndarray:
        iu, ju, _ = pair_index(self.n)
        out = np.empty((self.n, self.n))
        out[iu, ju] = self.values[p]
        out[ju, iu] = self.values[p]
        return out


def table_nbytes(n: int, d: int) -> int:
    return d * (n * (n + 1) // 2) * 8


def build_kernel_table(
    ranks: RankMatrix, centered: bool = False, memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> PairKernelTable:
    n, d = ranks.n, ranks.d
    need = table_nbytes(n, d)
    if need > memory_budget:
        raise CapacityExceeded(f"kernel table needs {need} bytes, budget is {memory_budget}")
    values = np.empty((d, n * (n + 1) // 2))
    for p in range(d):
        values[p] = kernel_column(ranks.ranks[:, p], centered)
    values.setflags(write=False)
    return PairKernelTable(n=n, values=values, centered=centered)


def grid_cdf(t, n: int):
    """cdf of the uniform law on ``{1/(n+1), ..., n/(n+1)}``."""
    return np.minimum(np.floor((n + 1) * np.asarray(t, dtype=float)) / n, 1.0)


def check_index_set(A, d: int) -> tuple[int, ...]:
    A = tuple(int(a) for a in A)
    if len(A) < 2:
        raise BadIndexSet(f"index set needs at least two elements, got {A}")
    if len(set(A)) != len(A):
        raise BadIndexSet(f"repeated index in {A}")
    if any(a < 0 or a >= d for a in A):
        raise BadIndexSet(f"index out of range 0..{d - 1} in {A}")
    return A


def moebius_process_eval(ranks: RankMatrix, A, u) -> float | np.ndarray:
    """Null-centered Moebius process at ``u`` (one point or a batch of rows).

    ``n^{-1/2} sum_i prod_{p in A} (1{U_ip <= u_p} - U_n(u_p))`` with
    ``U_ip = R_ip/(n+1)``.
    """
    A = check_index_set(A, ranks.d)
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if u.shape[1] != len(A):
        raise InputError(f"point has {u.shape[1]} coordinates, index set has {len(A)}")
    if np.any((u < 0) | (u > 1)):
        raise InputError("evaluation points must lie in [0, 1]")
    n = ranks.n
    # compare integer ranks with floor((n+1)u) to avoid rounding in R/(n+1) <= u
    thresh = np.floor((n + 1) * u)
    r = ranks.ranks[:, A]
    centred = (r[None, :, :] <= thresh[:, None, :]) - grid_cdf(u, n)[:, None, :]
    out = centred.prod(axis=2).sum(axis=1) / np.sqrt(n)
    return float(out[0]) if single else out
