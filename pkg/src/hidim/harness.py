"""Monte Carlo runner for rejection-rate tables and null calibration.

Every replication draws its own generator from ``(master_seed, cell, r)``
and rejections are integer counts, so a run gives the same table for any
number of worker threads.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import HidimError, InputError
from .models import ModelSpec, RngStream, generate
from .ranks_kernel import DEFAULT_MEMORY_BUDGET, build_kernel_table, compute_ranks, table_nbytes
from .statistics import ScalingMode, combined_statistic, decide, scaling, t_statistic_fast

CSV_COLUMNS = ["model", "test", "scaling", "n", "d", "replications", "reject_rate", "seed"]
THREADS_ENV = "HIDIM_THREADS"


@dataclass(frozen=True)
class TestSpec:
    """``S_k`` (one subset size) or ``T_m`` (combined over sizes 2..m)."""

    __test__ = False

    statistic: str
    order: int
    scaling: ScalingMode = ScalingMode.EXACT

    def __post_init__(self):
        object.__setattr__(self, "scaling", ScalingMode(self.scaling))
        if self.statistic not in ("S", "T"):
            raise InputError(f"statistic must be 'S' or 'T', got {self.statistic!r}")
        if self.order < 2:
            raise InputError(f"order must be >= 2, got {self.order}")

    @property
    def name(self) -> str:
        return f"{self.statistic}{self.order}"

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "order": self.order, "scaling": self.scaling.value}

    @classmethod
    def from_dict(cls, obj: dict) -> "TestSpec":
        return cls(obj["statistic"], int(obj["order"]), ScalingMode(obj.get("scaling", "exact")))


@dataclass
class ExperimentConfig:
    models: list[ModelSpec]
    grid: dict  # {"n": [...], "d": [...]}, d values as requested
    tests: list[TestSpec]
    replications: int = 500
    alpha: float = 0.05
    master_seed: int = 0
    thread_count: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise InputError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.models or not self.tests:
            raise InputError("config needs at least one model and one test")
        if not self.grid.get("n") or not self.grid.get("d"):
            raise InputError("grid needs non-empty 'n' and 'd' lists")
        if min(self.grid["n"]) < 2:
            raise InputError("sample sizes must be >= 2")

    def to_dict(self) -> dict:
        return {
            "models": [m.to_dict() for m in self.models],
            "grid": {"n": list(self.grid["n"]), "d": list(self.grid["d"])},
            "tests": [t.to_dict() for t in self.tests],
            "replications": self.replications,
            "alpha": self.alpha,
            "master_seed": self.master_seed,
            "thread_count": self.thread_count,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        try:
            return cls(
                models=[ModelSpec.from_dict(m) for m in obj["models"]],
                grid={"n": [int(v) for v in obj["grid"]["n"]], "d": [int(v) for v in obj["grid"]["d"]]},
                tests=[TestSpec.from_dict(t) for t in obj["tests"]],
                replications=int(obj.get("replications", 500)),
                alpha=float(obj.get("alpha", 0.05)),
                master_seed=int(obj.get("master_seed", 0)),
                thread_count=int(obj.get("thread_count", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"invalid experiment config: {exc!r}") from exc

    def digest(self) -> str:
        """Hash of everything that affects results (thread count excluded)."""
        obj = self.to_dict()
        del obj["thread_count"]
        return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class RejectionCell:
    model: str
    test: str
    scaling: str
    n: int
    d: int
    d_actual: int
    rejections: int
    replications: int
    reject_rate: float
    mean_runtime: float = 0.0

    def sort_key(self):
        return (self.model, self.test, self.scaling, self.n, self.d)


@dataclass
class RejectionTable:
    cells: list[RejectionCell] = field(default_factory=list)
    failed: list[dict] = field(default_factory=list)
    seed: int = 0
    config_hash: str = ""

    def sorted_cells(self) -> list[RejectionCell]:
        return sorted(self.cells, key=RejectionCell.sort_key)

    def lookup(self, model: str, test: str, scaling: str, n: int, d: int) -> RejectionCell:
        for cell in self.cells:
            if cell.sort_key() == (model, test, ScalingMode(scaling).value, n, d):
                return cell
        raise KeyError((model, test, scaling, n, d))


def resolve_threads(requested: int = 1) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return max(1, requested)


def cell_id(*parts) -> int:
    return zlib.crc32("|".join(str(p) for p in parts).encode())


def _t_values(data, m: int) -> np.ndarray:
    ranks = compute_ranks(data)
    if table_nbytes(ranks.n, ranks.d) <= DEFAULT_MEMORY_BUDGET:
        return t_statistic_fast(build_kernel_table(ranks), m)
    return t_statistic_fast(ranks, m)


def _z(t: np.ndarray, n: int, d: int, k: int, mode: ScalingMode) -> float:
    s = scaling(n, d, k, mode.resolve(k))
    return (float(t[k - 2]) - s.nu) / s.delta


def _test_statistic(test: TestSpec, t: np.ndarray, n: int, d: int) -> float:
    if test.statistic == "S":
        return _z(t, n, d, test.order, test.scaling)
    return combined_statistic([_z(t, n, d, k, test.scaling) for k in range(2, test.order + 1)], test.order)


def _run_chunk(spec, n, d_req, tests, alpha, seed, cid, reps):
    counts = [0] * len(tests)
    m = max(t.order for t in tests)
    start = time.perf_counter()
    for r in reps:
        sample = generate(spec, n, d_req, RngStream(seed, r, cid).generator())
        t = _t_values(sample.data, m)
        d = sample.d_actual
        for idx, test in enumerate(tests):
            counts[idx] += decide(_test_statistic(test, t, n, d), alpha)
    return counts, time.perf_counter() - start


def _chunks(total: int, parts: int) -> list[range]:
    size = math.ceil(total / parts)
    return [range(lo, min(lo + size, total)) for lo in range(0, total, size)]


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> RejectionTable:
    threads = resolve_threads(config.thread_count if threads is None else threads)
    table = RejectionTable(seed=config.master_seed, config_hash=config.digest())
    jobs = []
    for spec in config.models:
        for n in config.grid["n"]:
            for d_req in config.grid["d"]:
                try:
                    d_actual = spec.resolve_dimension(d_req)
                except HidimError as exc:
                    table.failed.append({"model": spec.label, "n": n, "d": d_req, "reason": str(exc)})
                    continue
                usable = []
                for test in config.tests:
                    try:
                        if test.order > d_actual:
                            raise InputError(f"order {test.order} exceeds dimension {d_actual}")
                        for k in range(2 if test.statistic == "T" else test.order, test.order + 1):
                            scaling(n, d_actual, k, test.scaling.resolve(k))
                        usable.append(test)
                    except HidimError as exc:
                        table.failed.append({
                            "model": spec.label, "test": test.name, "scaling": test.scaling.value,
                            "n": n, "d": d_req, "reason": str(exc),
                        })
                if usable:
                    jobs.append((spec, n, d_req, d_actual, usable))

    def run_cell(job):
        spec, n, d_req, _, tests = job
        cid = cell_id(spec.label, n, d_req)
        parts = _chunks(config.replications, threads)
        args = [(spec, n, d_req, tests, config.alpha, config.master_seed, cid, reps) for reps in parts]
        if threads == 1:
            results = [_run_chunk(*a) for a in args]
        else:
            results = list(pool.map(lambda a: _run_chunk(*a), args))
        counts = [sum(col) for col in zip(*(c for c, _ in results))]
        return counts, sum(s for _, s in results)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for job in jobs:
            spec, n, d_req, d_actual, tests = job
            try:
                counts, seconds = run_cell(job)
            except HidimError as exc:
                table.failed.append({"model": spec.label, "n": n, "d": d_req, "reason": str(exc)})
                continue
            for test, count in zip(tests, counts):
                table.cells.append(RejectionCell(
                    model=spec.label, test=test.name, scaling=test.scaling.value, n=n, d=d_req,
                    d_actual=d_actual, rejections=count, replications=config.replications,
                    reject_rate=count / config.replications,
                    mean_runtime=seconds / config.replications,
                ))
    table.cells = table.sorted_cells()
    return table


@dataclass
class NullCalibration:
    n: int
    d: int
    m: int
    scaling: str
    replications: int
    levels: list[float]
    quantiles: list[float]
    seed: int
    values: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        out = asdict(self)
        del out["values"]
        return out


MIN_NULL_REPLICATIONS = 100


def simulate_null(n, d, m, mode=ScalingMode.EXACT, replications=1000, levels=(0.9, 0.95, 0.99), seed=0,
                  threads: int | None = None) -> NullCalibration:
    """Simulated null distribution of the combined statistic and its quantiles."""
    mode = ScalingMode(mode)
    if replications < MIN_NULL_REPLICATIONS:
        raise InputError(f"need at least {MIN_NULL_REPLICATIONS} replications, got {replications}")
    levels = [float(v) for v in levels]
    if not levels or any(not 0.0 < v < 1.0 for v in levels):
        raise InputError(f"levels must lie in (0, 1), got {levels}")
    if not 2 <= m <= d:
        raise InputError(f"need 2 <= m <= d, got m={m}, d={d}")
    for k in range(2, m + 1):
        scaling(n, d, k, mode.resolve(k))
    test = TestSpec("T", m, mode)
    cid = cell_id("null", n, d, m)
    threads = resolve_threads(1 if threads is None else threads)

    def chunk(reps):
        out = []
        for r in reps:
            data = RngStream(seed, r, cid).generator().random((n, d))
            out.append(_test_statistic(test, _t_values(data, m), n, d))
        return out

    parts = _chunks(replications, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        values = np.concatenate([np.asarray(v) for v in pool.map(chunk, parts)])
    quantiles = np.quantile(values, levels)  # type-7 (linear) interpolation
    return NullCalibration(n, d, m, mode.value, replications, levels, [float(q) for q in quantiles], seed, values)


# -- output ----------------------------------------------------------------

def emit_table(table: RejectionTable, fmt: str = "csv") -> str:
    fmt = fmt.lower()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for c in table.sorted_cells():
            writer.writerow([c.model, c.test, c.scaling, c.n, c.d, c.replications, repr(c.reject_rate), table.seed])
        return buf.getvalue()
    if fmt == "json":
        obj = {
            "seed": table.seed,
            "config_hash": table.config_hash,
            "cells": [asdict(c) for c in table.sorted_cells()],
            "failed": table.failed,
        }
        return json.dumps(obj, indent=2) + "\n"
    if fmt in ("text", "pretty"):
        return _pretty(table)
    raise InputError(f"unknown output format {fmt!r}")


def parse_table_json(text: str) -> RejectionTable:
    obj = json.loads(text)
    return RejectionTable(
        cells=[RejectionCell(**c) for c in obj["cells"]],
        failed=obj.get("failed", []),
        seed=obj["seed"],
        config_hash=obj.get("config_hash", ""),
    )


def _pretty(table: RejectionTable) -> str:
    """Rejection rates in percent, one row per (model, test, scaling, n), d across."""
    cells = table.sorted_cells()
    ds = sorted({c.d for c in cells})
    rows = {}
    for c in cells:
        rows.setdefault((c.model, c.test, c.scaling, c.n), {})[c.d] = 100.0 * c.reject_rate
    head = f"{'model':<16} {'test':<4} {'scaling':<10} {'n':>4} " + " ".join(f"{d:>6}" for d in ds)
    lines = [head, "-" * len(head)]
    for (model, test, scal, n), vals in sorted(rows.items()):
        entries = " ".join(f"{vals[d]:6.1f}" if d in vals else f"{'':>6}" for d in ds)
        lines.append(f"{model:<16} {test:<4} {scal:<10} {n:>4} {entries}")
    if table.failed:
        lines.append(f"({len(table.failed)} cell(s) skipped; see JSON output for reasons)")
    return "\n".join(lines) + "\n"


# -- presets ---------------------------------------------------------------

STUDY_N = [16, 32, 64, 128]
STUDY_D = [4, 8, 16, 32, 64, 128, 256]


def _both(statistic, order):
    return [TestSpec(statistic, order, ScalingMode.EXACT), TestSpec(statistic, order, ScalingMode.ASYMPTOTIC)]


def preset(name: str, replications: int = 500, seed: int = 0) -> ExperimentConfig:
    """Configurations for the three reference rejection-rate tables."""
    power_tests = _both("S", 2) + _both("S", 3) + _both("T", 3)
    if name == "table1":
        models = [ModelSpec("independent")]
        tests = power_tests + [TestSpec("S", 4, ScalingMode.ASYMPTOTIC), TestSpec("T", 4, ScalingMode.ASYMPTOTIC)]
    elif name == "table2":
        models = [ModelSpec("gaussian", tau) for tau in (0.1, 0.3, 0.7)]
        tests = power_tests
    elif name == "table3":
        models = [ModelSpec("inductive"), ModelSpec("geisser_mantel"), ModelSpec("romano_siegel")]
        tests = power_tests
    else:
        raise InputError(f"unknown preset {name!r}; choose table1, table2 or table3")
    return ExperimentConfig(
        models=models, grid={"n": list(STUDY_N), "d": list(STUDY_D)}, tests=tests,
        replications=replications, alpha=0.05, master_seed=seed,
    )
