"""Data-generating processes for the simulation study.

Five models: mutual independence, an equicorrelated Gaussian calibrated by
the total squared Kendall tau, the inductive mod-1 model, the
Geisser-Mantel correlation model and the truncated Romano-Siegel model.
The last three are pairwise independent but dependent in triples.

Normals come from ``numpy.random.Generator.standard_normal`` (ziggurat) on
a PCG64 stream; outputs are reproducible for a fixed seed and numpy release.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, OutOfRange, UnsupportedDimension

#: requested dimension -> (actual dimension, p) with actual = p(p-1)/2
GEISSER_MANTEL_GRID = {4: (3, 3), 8: (6, 4), 16: (10, 5), 32: (28, 8), 64: (55, 11), 128: (120, 16), 256: (231, 22)}


class Model(enum.Enum):
    INDEPENDENT = "independent"
    GAUSSIAN = "gaussian"
    INDUCTIVE = "inductive"
    GEISSER_MANTEL = "geisser_mantel"
    ROMANO_SIEGEL = "romano_siegel"


@dataclass(frozen=True)
class ModelSpec:
    variant: Model
    tau_norm2: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Model(self.variant))
        if self.variant is Model.GAUSSIAN:
            if self.tau_norm2 is None or not self.tau_norm2 > 0:
                raise InputError("the Gaussian model needs tau_norm2 > 0")
        elif self.tau_norm2 is not None:
            raise InputError(f"tau_norm2 only applies to the Gaussian model, not {self.variant.value}")

    @property
    def label(self) -> str:
        if self.variant is Model.GAUSSIAN:
            return f"gaussian-{self.tau_norm2:g}"
        return self.variant.value

    def resolve_dimension(self, d_requested: int) -> int:
        if self.variant is Model.GEISSER_MANTEL:
            return geisser_mantel_dimension(d_requested)[0]
        if self.variant is Model.ROMANO_SIEGEL:
            return romano_siegel_dimension(d_requested)
        return d_requested

    def to_dict(self) -> dict:
        out = {"variant": self.variant.value}
        if self.tau_norm2 is not None:
            out["tau_norm2"] = self.tau_norm2
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelSpec":
        return cls(Model(obj["variant"]), obj.get("tau_norm2"))


@dataclass(frozen=True)
class RngStream:
    """Independent, reproducible stream keyed by ``(seed, cell, stream_index)``."""

    seed: int
    stream_index: int = 0
    cell: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, self.cell, self.stream_index])
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class Sample:
    data: np.ndarray
    d_actual: int
    params: dict


def _check_nd(n, d):
    if n < 2 or d < 2:
        raise InputError(f"need n >= 2 and d >= 2, got n={n}, d={d}")


def gen_independent(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    _check_nd(n, d)
    return rng.random((n, d))


def equicorr_rho(d: int, tau_norm2: float) -> float:
    """Common correlation whose pairwise Kendall taus square-sum to ``tau_norm2``."""
    if d < 2 or not tau_norm2 > 0:
        raise InputError(f"need d >= 2 and tau_norm2 > 0, got d={d}, tau_norm2={tau_norm2}")
    tau = math.sqrt(2.0 * tau_norm2 / (d * (d - 1)))
    if tau > 1.0:
        raise OutOfRange(f"pairwise tau {tau:.4g} exceeds 1 for d={d}, tau_norm2={tau_norm2}")
    return math.sin(math.pi / 2.0 * tau)


def gen_gaussian_equicorr(n: int, d: int, tau_norm2: float, rng: np.random.Generator) -> np.ndarray:
    _check_nd(n, d)
    rho = equicorr_rho(d, tau_norm2)
    z0 = rng.standard_normal((n, 1))
    z = rng.standard_normal((n, d))
    return math.sqrt(rho) * z0 + math.sqrt(1.0 - rho) * z


def inductive_columns(x1, x2, d: int) -> np.ndarray:
    """Extend two columns by ``X_k = X_{k-2} + X_{k-1}`` reduced into ``[0, 1]``."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    cols = [x1, x2]
    for _ in range(2, d):
        s = cols[-2] + cols[-1]
        cols.append(np.where(s <= 1.0, s, s - 1.0))
    return np.column_stack(cols)


def gen_inductive(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    if d < 3:
        raise UnsupportedDimension(f"the inductive model needs d >= 3, got {d}")
    u = rng.random((n, 2))
    return inductive_columns(u[:, 0], u[:, 1], d)


def geisser_mantel_dimension(d_requested: int) -> tuple[int, int, int]:
    """``(d_actual, p, m)`` for a requested dimension on the supported grid."""
    try:
        d_actual, p = GEISSER_MANTEL_GRID[d_requested]
    except KeyError:
        raise UnsupportedDimension(
            f"Geisser-Mantel supports d in {sorted(GEISSER_MANTEL_GRID)}, got {d_requested}"
        ) from None
    return d_actual, p, p // 2


def gen_geisser_mantel(n: int, d_requested: int, rng: np.random.Generator):
    """Each row: strict upper triangle (row-major) of the sample correlation
    matrix of ``p + m`` independent ``N_p(0, I)`` draws."""
    d_actual, p, m = geisser_mantel_dimension(d_requested)
    z = rng.standard_normal((n, p + m, p))
    z -= z.mean(axis=1, keepdims=True)
    cov = np.einsum("rip,riq->rpq", z, z)
    sd = np.sqrt(np.einsum("rpp->rp", cov))
    corr = cov / (sd[:, :, None] * sd[:, None, :])
    iu, ju = np.triu_indices(p, k=1)
    return np.clip(corr[:, iu, ju], -1.0, 1.0), d_actual, p, m


def romano_siegel_dimension(d_requested: int) -> int:
    if d_requested < 3:
        raise UnsupportedDimension(f"Romano-Siegel needs d >= 3, got {d_requested}")
    return 3 * (d_requested // 3)


def romano_siegel_block(z: np.ndarray) -> np.ndarray:
    """Map normal triples ``(Z1, Z2, Z3)`` (last axis) to ``(|Z1| sign(Z2 Z3), Z2, Z3)``."""
    z = np.asarray(z, dtype=float)
    out = z.copy()
    out[..., 0] = np.abs(z[..., 0]) * np.sign(z[..., 1] * z[..., 2])
    return out


def gen_romano_siegel(n: int, d_requested: int, rng: np.random.Generator):
    d_actual = romano_siegel_dimension(d_requested)
    z = rng.standard_normal((n, d_actual // 3, 3))
    return romano_siegel_block(z).reshape(n, d_actual), d_actual


def _has_ties(x: np.ndarray) -> bool:
    s = np.sort(x, axis=0)
    return bool(np.any(s[1:] == s[:-1]))


def generate(spec: ModelSpec, n: int, d_requested: int, rng: np.random.Generator) -> Sample:
    """Draw one dataset; redraws (from the same stream) on a within-column tie."""
    while True:
        params = {}
        if spec.variant is Model.INDEPENDENT:
            data, d_actual = gen_independent(n, d_requested, rng), d_requested
        elif spec.variant is Model.GAUSSIAN:
            data, d_actual = gen_gaussian_equicorr(n, d_requested, spec.tau_norm2, rng), d_requested
            params["rho"] = equicorr_rho(d_requested, spec.tau_norm2)
        elif spec.variant is Model.INDUCTIVE:
            data, d_actual = gen_inductive(n, d_requested, rng), d_requested
        elif spec.variant is Model.GEISSER_MANTEL:
            data, d_actual, p, m = gen_geisser_mantel(n, d_requested, rng)
            params.update(p=p, m=m)
        else:
            data, d_actual = gen_romano_siegel(n, d_requested, rng)
        if data.shape[1] != d_actual:
            raise AssertionError(f"{spec.label} produced {data.shape[1]} columns, expected {d_actual}")
        if not _has_ties(data):
            return Sample(data, d_actual, params)
