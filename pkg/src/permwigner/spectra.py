"""Anticommutator spectra and the symmetric Poisson law.

The limiting density ``nu_SP`` of the anticommutator of two free standard
semicirculars has support ``|x| <= sqrt((11 + 5 sqrt 5) / 2)`` and an
integrable singularity at the origin.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, stats

from .errors import DimensionMismatchError, PermWignerError

NU_SP_EDGE = math.sqrt((11 + 5 * math.sqrt(5)) / 2)
HERMITIAN_TOL = 1e-10
_ZERO_PROBE = 1e-8


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``AB + BA``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} are not equal square shapes")
    ab = a @ b
    # BA = (AB)^H for Hermitian inputs; symmetrise so the output is exactly Hermitian
    return ab + ab.conj().T


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol * scale)


def eigenvalues_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Sorted eigenvalues of a Hermitian matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m, tol):
        raise PermWignerError("matrix is not Hermitian")
    return np.linalg.eigvalsh(m)


# -- the symmetric Poisson density ------------------------------------------------------


def _nu_sp_raw(x: np.ndarray) -> np.ndarray:
    x2 = x * x
    disc = np.sqrt(np.maximum(x2 * (1 + 11 * x2 - x2 * x2), 0.0) / 27)
    cu = np.cbrt((18 * x2 + 1) / 27 - disc)
    bracket = (3 * x2 + 1) / (9 * cu) - cu
    return math.sqrt(3) / (2 * math.pi * np.abs(x)) * bracket


def nu_sp_density(x):
    """Density of ``nu_SP``.  The origin is evaluated at ``|x| = 1e-8``."""
    x = np.asarray(x, dtype=float)
    ax = np.where(np.abs(x) < _ZERO_PROBE, _ZERO_PROBE, np.abs(x))
    inside = ax <= NU_SP_EDGE
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(inside, _nu_sp_raw(np.where(inside, ax, 1.0)), 0.0)
    val = np.maximum(val, 0.0)  # clip rounding noise near the edge
    return val if val.ndim else float(val)


def _half_mass(upper: float) -> float:
    # integral of the density over [0, upper]
    if upper <= 0:
        return 0.0
    val, _ = integrate.quad(nu_sp_density, 0.0, min(upper, NU_SP_EDGE), limit=200, epsabs=1e-12, epsrel=1e-10)
    return val


def nu_sp_cdf(x):
    """CDF of ``nu_SP`` by adaptive quadrature, split at the origin."""
    arr = np.asarray(x, dtype=float)
    out = np.empty(arr.shape)
    flat = arr.ravel()
    res = out.ravel()
    for i, xi in enumerate(flat):
        half = _half_mass(abs(xi))
        res[i] = 0.5 + half if xi >= 0 else 0.5 - half
    np.clip(out, 0.0, 1.0, out=out)
    return out if out.ndim else float(out)


class _NuSPTable:
    """Fast vectorised CDF by interpolation on a fine quadrature grid."""

    def __init__(self, points: int = 4001):
        # cluster nodes near 0 where the density is steep
        u = np.linspace(0.0, 1.0, points)
        self.x = NU_SP_EDGE * u**2
        pieces = [
            integrate.quad(nu_sp_density, a, b, limit=100, epsabs=1e-13)[0]
            for a, b in zip(self.x[:-1], self.x[1:])
        ]
        self.half = np.concatenate([[0.0], np.cumsum(pieces)])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        half = np.interp(np.abs(x), self.x, self.half, right=self.half[-1])
        return np.clip(0.5 + np.sign(x) * half, 0.0, 1.0)


_TABLE: _NuSPTable | None = None


def nu_sp_cdf_fast(x):
    """Interpolated CDF, accurate to about ``1e-7``; used for large samples."""
    global _TABLE
    if _TABLE is None:
        _TABLE = _NuSPTable()
    return _TABLE(x)


def nu_sp_quantile(p):
    """Inverse CDF by interpolation of the tabulated CDF."""
    global _TABLE
    if _TABLE is None:
        _TABLE = _NuSPTable()
    p = np.asarray(p, dtype=float)
    grid_x = np.concatenate([-_TABLE.x[::-1], _TABLE.x[1:]])
    grid_f = np.concatenate([0.5 - _TABLE.half[::-1], 0.5 + _TABLE.half[1:]])
    return np.interp(p, grid_f, grid_x)


# -- samples and distances ----------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumSample:
    eigenvalues: np.ndarray
    n: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.sort(np.asarray(self.eigenvalues, dtype=float))
        if ev.size != self.n:
            raise DimensionMismatchError(f"{ev.size} eigenvalues for n = {self.n}")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)


def ks_distance(sample, cdf=nu_sp_cdf_fast) -> float:
    """Kolmogorov-Smirnov distance between a sample and a model CDF."""
    values = sample.eigenvalues if isinstance(sample, SpectrumSample) else np.asarray(sample, dtype=float)
    if values.size == 0:
        raise PermWignerError("empty sample")
    return float(stats.kstest(values, cdf).statistic)


def histogram(sample, bin_count: int, value_range: tuple[float, float] | None = None):
    """Bin edges and density-normalised counts."""
    values = sample.eigenvalues if isinstance(sample, SpectrumSample) else np.asarray(sample, dtype=float)
    if bin_count <= 0:
        raise PermWignerError("bin_count must be positive")
    if value_range is not None and not value_range[1] > value_range[0]:
        raise PermWignerError(f"empty histogram range {value_range}")
    counts, edges = np.histogram(values, bins=bin_count, range=value_range, density=True)
    return edges, counts


def write_two_column(path: str | Path, x, y, header=("x", "value")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in zip(np.asarray(x), np.asarray(y)):
            w.writerow([repr(float(a)), repr(float(b))])


def anticommutator_spectrum(a: np.ndarray, b: np.ndarray, **metadata) -> SpectrumSample:
    ev = eigenvalues_hermitian(anticommutator(a, b))
    return SpectrumSample(ev, ev.size, dict(metadata))
