"""Exact moment catalog for rank kernels, with an enumeration oracle.

Everything here is computed with :class:`fractions.Fraction`; no floating
point is involved, so agreement between a closed form and its brute-force
counterpart means equality of rationals.

Ranks of one column are a uniform random permutation of ``1..n`` under any
dependence structure, so single-column moments are averages over ``n!``
permutations.  Moments of the subset statistic involve ``k`` independent
columns (the ``H_k`` null) and are averaged over ``(n!)^k`` configurations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from typing import Callable

from .errors import EnumerationTooLarge, InputError, MismatchFound, PatternInfeasible
from .ranks_kernel import kernel_raw

F = Fraction

#: enumeration limit (number of configurations) for the oracle
MAX_CONFIGURATIONS = 1000


# -- closed forms ----------------------------------------------------------

def _b(n):
    """Null mean of the raw kernel: (diagonal, off-diagonal)."""
    return F(1, 6) - F(1, 6 * n), F(-1, 6 * n)


def mu_exact(n: int, k: int) -> Fraction:
    diag, off = _b(n)
    return diag**k + (n - 1) * off**k


def sigma2_polynomial(n: int, k: int) -> Fraction:
    """Closed-form null variance polynomials for k = 2 and k = 3."""
    if k == 2:
        return F((n - 2) ** 2 * (n - 1) * (8 * n + 1), 32400 * n**2 * (n + 1) ** 2)
    if k == 3:
        poly = 16 * n**5 - 96 * n**4 + 359 * n**3 - 269 * n**2 - 963 * n - 370
        return F((n - 2) * (n - 1) * poly, 5832000 * n**4 * (n + 1) ** 3)
    raise InputError(f"no closed polynomial for k={k}")


CTILDE = {
    "1234": lambda n: F(1, 20 * n**2),
    "1123": lambda n: F(-(5 * n**2 - 2 * n - 9), 180 * n**2 * (n + 1)),
    # 1223 and 1212 fitted to exhaustive enumeration (n = 3..7); with these the
    # quadruple decomposition reproduces the k = 2, 3 variance polynomials
    "1223": lambda n: F(-(2 * n**2 - 8 * n - 9), 180 * n**2 * (n + 1)),
    "1122": lambda n: F(5 * n**3 - 6 * n**2 - 5 * n + 9, 180 * n**2 * (n + 1)),
    "1212": lambda n: F(2 * n**3 - 6 * n**2 + 7 * n + 9, 180 * n**2 * (n + 1)),
    "1112": lambda n: F(-(2 * n**2 - 3), 60 * n**2 * (n + 1)),
    "1111": lambda n: F((n - 1) * (2 * n**2 - 3), 60 * n**2 * (n + 1)),
}


def sigma2_decomposition(n: int, k: int, ctilde: dict | None = None) -> Fraction:
    """Null variance of one subset statistic of size ``k``, any ``k >= 1``.

    Sums covariances of kernel products over all index quadruples, grouped
    by the pattern of coincident indices.  Column independence turns each
    covariance into ``E[I I]^k - E[I]^k E[I]^k`` with the single-column
    second moments taken from ``ctilde``.
    """
    if n < 2 or k < 1:
        raise InputError(f"need n >= 2 and k >= 1, got n={n}, k={k}")
    ct = {key: f(n) for key, f in (ctilde or CTILDE).items()}
    diag, off = _b(n)

    def cov(key, first, second):
        return ct[key] ** k - first**k * second**k

    total = (
        n * (n - 1) * (n - 2) * (n - 3) * cov("1234", off, off)
        + n * (n - 1) * (n - 2) * (2 * cov("1123", diag, off) + 4 * cov("1223", off, off))
        + n * (n - 1) * (4 * cov("1112", diag, off) + cov("1122", diag, diag) + 2 * cov("1212", off, off))
        + n * cov("1111", diag, diag)
    )
    return total / n**2


@lru_cache(maxsize=1024)
def sigma2_exact(n: int, k: int) -> Fraction:
    return sigma2_decomposition(n, k)


class Phi2Pattern(enum.Enum):
    FOUR_DISTINCT = "Phi2_size4"
    THREE_DISTINCT = "Phi2_size3"
    TWO_DISTINCT = "Phi2_size2"
    DIAG_EQUAL = "Phi2_diag_eq"
    DIAG_DISTINCT = "Phi2_diag_ne"


_PHI2 = {
    Phi2Pattern.FOUR_DISTINCT: (4, lambda n: F(1, 45 * n**2)),
    Phi2Pattern.THREE_DISTINCT: (3, lambda n: F(-(2 * n**2 - 3 * n - 4), 180 * n**2 * (n + 1))),
    Phi2Pattern.TWO_DISTINCT: (2, lambda n: F((n - 2) * (n**2 - n - 1), 90 * n**2 * (n + 1))),
    Phi2Pattern.DIAG_EQUAL: (1, lambda n: F((n - 2) * (n - 1) * (n + 2), 180 * n**2 * (n + 1))),
    Phi2Pattern.DIAG_DISTINCT: (2, lambda n: F(-(n - 2) * (n + 2), 180 * n**2 * (n + 1))),
}


def phi2(pattern: Phi2Pattern | str, n: int) -> Fraction:
    """Covariance of two centered kernels of one column, by index pattern."""
    pattern = Phi2Pattern(pattern)
    distinct, formula = _PHI2[pattern]
    if n < max(2, distinct):
        raise PatternInfeasible(f"{pattern.value} needs n >= {max(2, distinct)}, got {n}")
    return formula(n)


# -- brute force -----------------------------------------------------------

def brute_force_moment(expr: Callable, n: int, columns: int = 1, max_configurations: int = MAX_CONFIGURATIONS):
    """Exact expectation of ``expr`` over independent uniform rank columns.

    ``expr`` receives a tuple of ``columns`` permutations of ``1..n`` (each a
    tuple indexed by row ``0..n-1``) and must return a rational.
    """
    count = math.factorial(n) ** columns
    total = sum((expr(cols) for cols in _configurations(n, columns, max_configurations)), F(0))
    return total / count


def _configurations(n, columns, max_configurations=MAX_CONFIGURATIONS):
    count = math.factorial(n) ** columns
    if count > max_configurations:
        raise EnumerationTooLarge(f"{count} configurations exceed the limit {max_configurations}")
    return product(list(permutations(range(1, n + 1))), repeat=columns)


def _q(r, n):
    return F(r * (r - 1), n * (n + 1))


def _mx(a, b, n):
    return F(max(a, b), n + 1)


def _lin(r, n):
    return F(r, n + 1)


def _kern(col, i, j, n):
    return kernel_raw(col[i], col[j], n, exact=True)


def _kern_c(col, i, j, n):
    return _kern(col, i, j, n) - _b(n)[0 if i == j else 1]


def subset_statistic_exact(cols, n) -> Fraction:
    """Exact ``(1/n) sum_{i,j} prod_p I^{(p)}_{ij}`` for explicit rank columns."""
    mats = [[[_kern(c, i, j, n) for j in range(n)] for i in range(n)] for c in cols]
    total = F(0)
    for i in range(n):
        for j in range(n):
            prod = F(1)
            for m in mats:
                prod *= m[i][j]
            total += prod
    return total / n


def _single(fn):
    """Wrap a function of (ranks, n) as a one-column brute-force routine."""
    return lambda n, k=None, limit=MAX_CONFIGURATIONS: brute_force_moment(lambda cols: fn(cols[0], n), n,
                                                                          max_configurations=limit)


def _phi2_brute(a, b, c, e):
    def run(n, k=None, limit=MAX_CONFIGURATIONS):
        exy = brute_force_moment(lambda cols: _kern_c(cols[0], a, b, n) * _kern_c(cols[0], c, e, n), n,
                                 max_configurations=limit)
        ex = brute_force_moment(lambda cols: _kern_c(cols[0], a, b, n), n, max_configurations=limit)
        ey = brute_force_moment(lambda cols: _kern_c(cols[0], c, e, n), n, max_configurations=limit)
        return exy - ex * ey

    return run


def _mu_brute(n, k, limit=MAX_CONFIGURATIONS):
    return brute_force_moment(lambda cols: subset_statistic_exact(cols, n), n, columns=k, max_configurations=limit)


def _sigma2_brute(n, k, limit=MAX_CONFIGURATIONS):
    values = [subset_statistic_exact(cols, n) for cols in _configurations(n, k, limit)]
    mean = sum(values, F(0)) / len(values)
    return sum(((v - mean) ** 2 for v in values), F(0)) / len(values)


# -- catalog ---------------------------------------------------------------

@dataclass(frozen=True)
class MomentEntry:
    name: str
    distinct: int
    closed: Callable
    brute: Callable
    uses_k: bool = False


def _entry(name, distinct, closed, brute, uses_k=False):
    return MomentEntry(name, distinct, closed, brute, uses_k)


_ENTRIES = [
    _entry("B1", 1, lambda n: F(n - 1, 3 * n), _single(lambda c, n: _q(c[0], n))),
    _entry("B12", 2, lambda n: F(2, 3), _single(lambda c, n: _mx(c[0], c[1], n))),
    _entry("B11", 1, lambda n: F(1, 2), _single(lambda c, n: _lin(c[0], n))),
    _entry("B11_up", 1, lambda n: F((n - 1) * (3 * n**2 - 2), 15 * n**2 * (n + 1)),
           _single(lambda c, n: _q(c[0], n) ** 2)),
    _entry("B12_up", 2, lambda n: F((n - 2) * (5 * n**2 + n - 3), 45 * n**2 * (n + 1)),
           _single(lambda c, n: _q(c[0], n) * _q(c[1], n))),
    _entry("B1_23", 3, lambda n: F(20 * n**2 - 8 * n - 21, 90 * n * (n + 1)),
           _single(lambda c, n: _q(c[0], n) * _mx(c[1], c[2], n))),
    _entry("B1_11", 1, lambda n: F((n - 1) * (3 * n + 2), 12 * n * (n + 1)),
           _single(lambda c, n: _q(c[0], n) * _lin(c[0], n))),
    _entry("B1_12", 2, lambda n: F(16 * n**2 - 5 * n - 14, 60 * n * (n + 1)),
           _single(lambda c, n: _q(c[0], n) * _mx(c[0], c[1], n))),
    _entry("B1_22", 2, lambda n: F(2 * n**2 - n - 2, 12 * n * (n + 1)),
           _single(lambda c, n: _q(c[0], n) * _lin(c[1], n))),
    _entry("B11_11", 1, lambda n: F(2 * n + 1, 6 * (n + 1)), _single(lambda c, n: _lin(c[0], n) ** 2)),
    _entry("B11_12", 2, lambda n: F(3 * n + 2, 8 * (n + 1)),
           _single(lambda c, n: _lin(c[0], n) * _mx(c[0], c[1], n))),
    _entry("B11_22", 2, lambda n: F(3 * n + 2, 12 * (n + 1)),
           _single(lambda c, n: _lin(c[0], n) * _lin(c[1], n))),
    _entry("B11_23", 3, lambda n: F(4 * n + 3, 12 * (n + 1)),
           _single(lambda c, n: _lin(c[0], n) * _mx(c[1], c[2], n))),
    _entry("B12_12", 2, lambda n: F(3 * n + 2, 6 * (n + 1)), _single(lambda c, n: _mx(c[0], c[1], n) ** 2)),
    _entry("B12_34", 4, lambda n: F(4 * (5 * n + 4), 45 * (n + 1)),
           _single(lambda c, n: _mx(c[0], c[1], n) * _mx(c[2], c[3], n))),
    _entry("B12_23", 3, lambda n: F(7 * (4 * n + 3), 60 * (n + 1)),
           _single(lambda c, n: _mx(c[0], c[1], n) * _mx(c[1], c[2], n))),
    _entry("MeanI_diag", 1, lambda n: _b(n)[0], _single(lambda c, n: _kern(c, 0, 0, n))),
    _entry("MeanI_offdiag", 2, lambda n: _b(n)[1], _single(lambda c, n: _kern(c, 0, 1, n))),
]

for _key, _formula in CTILDE.items():
    _a, _bb, _c, _e = (int(ch) - 1 for ch in _key)
    _ENTRIES.append(_entry(
        f"Ctilde_{_key}", len(set(_key)), _formula,
        _single(lambda c, n, a=_a, b=_bb, cc=_c, e=_e: _kern(c, a, b, n) * _kern(c, cc, e, n)),
    ))

_PHI2_INDICES = {
    Phi2Pattern.FOUR_DISTINCT: (0, 1, 2, 3),
    Phi2Pattern.THREE_DISTINCT: (0, 1, 0, 2),
    Phi2Pattern.TWO_DISTINCT: (0, 1, 0, 1),
    Phi2Pattern.DIAG_EQUAL: (0, 0, 0, 0),
    Phi2Pattern.DIAG_DISTINCT: (0, 0, 1, 1),
}
for _pat, (_distinct, _formula) in _PHI2.items():
    _ENTRIES.append(_entry(_pat.value, _distinct, _formula, _phi2_brute(*_PHI2_INDICES[_pat])))


def _sigma2_closed(n, k):
    return sigma2_polynomial(n, k) if k in (2, 3) else sigma2_exact(n, k)


_ENTRIES.append(_entry("Mu", 2, mu_exact, _mu_brute, uses_k=True))
_ENTRIES.append(_entry("Sigma2", 2, _sigma2_closed, _sigma2_brute, uses_k=True))

CATALOG: dict[str, MomentEntry] = {e.name: e for e in _ENTRIES}
MOMENT_IDS = tuple(CATALOG)


def moment_closed_form(name: str, n: int, k: int | None = None) -> Fraction:
    """Exact value of a catalogued closed form.

    Formulas may be evaluated one index short of the pattern's distinct
    count (they are rational functions of ``n``); below that the pattern is
    rejected.
    """
    try:
        entry = CATALOG[name]
    except KeyError:
        raise InputError(f"unknown moment id {name!r}; known: {', '.join(MOMENT_IDS)}") from None
    if n < max(2, entry.distinct - 1):
        raise PatternInfeasible(f"{name} is not defined for n={n}")
    if entry.uses_k:
        if k is None or k < 2:
            raise InputError(f"{name} needs k >= 2")
        return entry.closed(n, k)
    return entry.closed(n)


@dataclass
class CheckedIdentity:
    name: str
    n: int
    k: int | None
    value: Fraction


def verify_catalog(n_range, k_values=(2,), names=None, catalog=None, max_configurations=MAX_CONFIGURATIONS):
    """Check every feasible closed form against enumeration, exactly.

    Returns the list of identities checked; raises :class:`MismatchFound`
    on the first disagreement.  Identities whose enumeration exceeds the
    configuration limit at a given ``n`` are skipped.
    """
    catalog = catalog or CATALOG
    checked = []
    for n in n_range:
        for name, entry in catalog.items():
            if names is not None and name not in names:
                continue
            if n < max(2, entry.distinct):
                continue
            ks = k_values if entry.uses_k else (None,)
            for k in ks:
                columns = k if entry.uses_k else 1
                if math.factorial(n) ** columns > max_configurations:
                    continue
                closed = entry.closed(n, k) if entry.uses_k else entry.closed(n)
                brute = entry.brute(n, k, max_configurations)
                if closed != brute:
                    raise MismatchFound(name if k is None else f"{name}(k={k})", n, closed, brute)
                checked.append(CheckedIdentity(name, n, k, closed))
    return checked
