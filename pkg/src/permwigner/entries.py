"""Entry laws for Wigner matrices and their exact mixed moments.

An off-diagonal entry ``X`` is centred with ``E|X|^2 = 1`` and pseudovariance
``E[X^2] = beta``.  Diagonal entries are real.  :func:`mixed_moment` returns
``E[X^p conj(X)^q]`` exactly; every exact oracle in the package is built on it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, OrderExceededError

KINDS = ("gaussian", "rademacher_real", "rademacher_complex_xix", "table")
DIAG_KINDS = ("gaussian_real", "rademacher_real")
DEFAULT_MOMENT_ORDER = 8

_XIX_PHASE = (1 + 1j) / math.sqrt(2)
_TOL = 1e-9


def _double_factorial(k: int) -> int:
    """(k)!! with the convention (-1)!! = 1."""
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


@dataclass(frozen=True)
class EntrySpec:
    """Law of the entries of a Wigner matrix.

    Parameters
    ----------
    kind : str
        One of ``gaussian``, ``rademacher_real``, ``rademacher_complex_xix``
        or ``table``.
    beta : complex, optional
        Pseudovariance ``E[X^2]``.  Forced to 1 for ``rademacher_real`` and to
        ``1j`` for ``rademacher_complex_xix``; derived from the support for
        ``table``.
    diag_kind : str
        ``gaussian_real`` or ``rademacher_real``.
    diag_variance : float
        Variance of the (real, centred) diagonal entries.
    moment_order : int
        Largest ``p + q`` accepted by :func:`mixed_moment`.
    values, probs : tuple, optional
        Support and weights of a ``table`` law.  Must be centred with unit
        variance.
    """

    kind: str = "gaussian"
    beta: complex | None = None
    diag_kind: str = "gaussian_real"
    diag_variance: float = 1.0
    moment_order: int = DEFAULT_MOMENT_ORDER
    values: tuple[complex, ...] | None = None
    probs: tuple[float, ...] | None = None
    moment_bounds: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown entry kind {self.kind!r}; expected one of {KINDS}")
        if self.diag_kind not in DIAG_KINDS:
            raise ConfigError(f"unknown diagonal kind {self.diag_kind!r}")
        if not self.diag_variance >= 0 or not math.isfinite(self.diag_variance):
            raise ConfigError("diag_variance must be finite and nonnegative")
        if self.moment_order < 2:
            raise ConfigError("moment_order must be at least 2")

        beta = self._resolve_beta()
        if abs(beta) > 1 + _TOL:
            raise ConfigError(f"|beta| = {abs(beta):.6g} exceeds 1")
        object.__setattr__(self, "beta", complex(beta))
        object.__setattr__(self, "moment_bounds", self._compute_moment_bounds())

    def _resolve_beta(self) -> complex:
        if self.kind == "rademacher_real":
            if self.beta is not None and abs(complex(self.beta) - 1) > _TOL:
                raise ConfigError("rademacher_real entries have beta = 1")
            return 1.0
        if self.kind == "rademacher_complex_xix":
            if self.beta is not None and abs(complex(self.beta) - 1j) > _TOL:
                raise ConfigError("rademacher_complex_xix entries have beta = i")
            return 1j
        if self.kind == "table":
            if self.values is None or self.probs is None or len(self.values) != len(self.probs):
                raise ConfigError("table law needs values and probs of equal length")
            v = np.asarray(self.values, dtype=complex)
            p = np.asarray(self.probs, dtype=float)
            if np.any(p < 0) or abs(p.sum() - 1) > _TOL:
                raise ConfigError("table probabilities must be nonnegative and sum to 1")
            if abs(np.sum(p * v)) > _TOL:
                raise ConfigError("table law must be centred")
            if abs(np.sum(p * np.abs(v) ** 2) - 1) > _TOL:
                raise ConfigError("table law must have unit variance")
            derived = complex(np.sum(p * v * v))
            if self.beta is not None and abs(complex(self.beta) - derived) > 1e-6:
                raise ConfigError(f"beta {self.beta} disagrees with the table law ({derived})")
            return derived
        return 0.0 if self.beta is None else complex(self.beta)

    def _compute_moment_bounds(self) -> tuple[float, ...]:
        # m_l >= E|X|^l: exact for even l, Lyapunov bound from the next even order otherwise.
        bounds = [1.0]
        for order in range(1, self.moment_order + 1):
            even = order + (order % 2)
            abs_even = _abs_moment_even(self, even)
            bounds.append(abs_even ** (order / even) * (1 + 1e-12))
        return tuple(bounds)

    # -- convenience constructors -------------------------------------------------
    @classmethod
    def gaussian(cls, beta: complex = 0.0, **kw) -> "EntrySpec":
        return cls(kind="gaussian", beta=beta, **kw)

    @classmethod
    def rademacher(cls, **kw) -> "EntrySpec":
        return cls(kind="rademacher_real", **kw)

    @classmethod
    def rademacher_xix(cls, **kw) -> "EntrySpec":
        return cls(kind="rademacher_complex_xix", **kw)

    @property
    def is_real(self) -> bool:
        """True when every off-diagonal entry is real almost surely."""
        if self.kind == "rademacher_real":
            return True
        if self.kind == "gaussian":
            return abs(self.beta - 1) < _TOL
        if self.kind == "table":
            return bool(np.all(np.abs(np.imag(self.values)) < _TOL))
        return False

    # -- config round trip ----------------------------------------------------------
    def to_config(self, seed: int | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": self.kind,
            "beta": [self.beta.real, self.beta.imag],
            "diag_kind": self.diag_kind,
            "diag_variance": self.diag_variance,
        }
        if self.moment_order != DEFAULT_MOMENT_ORDER:
            out["moment_order"] = self.moment_order
        if self.kind == "table":
            out["values"] = [[complex(v).real, complex(v).imag] for v in self.values]
            out["probs"] = list(self.probs)
        if seed is not None:
            out["seed"] = seed
        return out

    @classmethod
    def from_config(cls, section: dict[str, Any]) -> "EntrySpec":
        known = {"kind", "beta", "diag_kind", "diag_variance", "moment_order", "values", "probs", "seed"}
        extra = set(section) - known
        if extra:
            raise ConfigError(f"unknown entry keys: {sorted(extra)}")
        kw: dict[str, Any] = {}
        for key in ("kind", "diag_kind", "diag_variance", "moment_order"):
            if key in section:
                kw[key] = section[key]
        if "beta" in section:
            kw["beta"] = _parse_complex(section["beta"])
        if "values" in section:
            kw["values"] = tuple(_parse_complex(v) for v in section["values"])
        if "probs" in section:
            kw["probs"] = tuple(float(p) for p in section["probs"])
        return cls(**kw)


def _parse_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


def _abs_moment_even(spec: EntrySpec, order: int) -> float:
    k = order // 2
    return float(abs(mixed_moment(spec, k, k, check_order=False)))


def _gaussian_mixed_moment(beta: complex, p: int, q: int) -> complex:
    # Wick: pair k of the X's with k of the conj(X)'s (value 1 each); the rest
    # pair among themselves (beta for X X, conj(beta) for conj(X) conj(X)).
    if (p + q) % 2:
        return 0j
    total = 0j
    for k in range(min(p, q) + 1):
        rp, rq = p - k, q - k
        if rp % 2 or rq % 2:
            continue
        count = math.comb(p, k) * math.comb(q, k) * math.factorial(k)
        count *= _double_factorial(rp - 1) * _double_factorial(rq - 1)
        total += count * beta ** (rp // 2) * beta.conjugate() ** (rq // 2)
    return total


def mixed_moment(spec: EntrySpec, p: int, q: int, *, check_order: bool = True) -> complex:
    """Exact ``E[X^p conj(X)^q]`` for an off-diagonal entry of law ``spec``."""
    if p < 0 or q < 0:
        raise ValueError("moment exponents must be nonnegative")
    if check_order and p + q > spec.moment_order:
        raise OrderExceededError(f"p + q = {p + q} exceeds moment_order = {spec.moment_order}")
    if p + q == 0:
        return 1 + 0j
    if spec.kind == "gaussian":
        return _gaussian_mixed_moment(spec.beta, p, q)
    if spec.kind == "rademacher_real":
        return 1 + 0j if (p + q) % 2 == 0 else 0j
    if spec.kind == "rademacher_complex_xix":
        if (p + q) % 2:
            return 0j
        return complex(cmath.exp(1j * math.pi * (p - q) / 4))
    v = np.asarray(spec.values, dtype=complex)
    w = np.asarray(spec.probs, dtype=float)
    return complex(np.sum(w * v**p * np.conj(v) ** q))


def diag_moment(spec: EntrySpec, order: int, *, check_order: bool = True) -> float:
    """Exact ``E[D^order]`` for a diagonal entry."""
    if check_order and order > spec.moment_order:
        raise OrderExceededError(f"order {order} exceeds moment_order = {spec.moment_order}")
    if order == 0:
        return 1.0
    if order % 2:
        return 0.0
    scale = spec.diag_variance ** (order // 2)
    if spec.diag_kind == "gaussian_real":
        return float(scale * _double_factorial(order - 1))
    return float(scale)


def moment_tables(spec: EntrySpec, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``off[p, q] = E[X^p conj(X)^q]`` and ``diag[k] = E[D^k]`` up to ``order``."""
    if order > spec.moment_order:
        raise OrderExceededError(f"order {order} exceeds moment_order = {spec.moment_order}")
    off = np.zeros((order + 1, order + 1), dtype=complex)
    for p in range(order + 1):
        for q in range(order + 1 - p):
            off[p, q] = mixed_moment(spec, p, q)
    diag = np.array([diag_moment(spec, k) for k in range(order + 1)], dtype=float)
    return off, diag


def sample_offdiag(spec: EntrySpec, rng: np.random.Generator, size=None):
    """Draw off-diagonal entries.  Returns a complex array (or scalar if ``size`` is None)."""
    if spec.kind == "gaussian":
        beta = spec.beta
        mod, theta = abs(beta), cmath.phase(beta)
        g1 = rng.standard_normal(size)
        g2 = rng.standard_normal(size)
        x = math.sqrt((1 + mod) / 2) * g1 + 1j * math.sqrt(max(0.0, (1 - mod) / 2)) * g2
        if theta != 0.0:
            x = x * cmath.exp(0.5j * theta)
        return x
    if spec.kind == "rademacher_real":
        return (2.0 * rng.integers(0, 2, size=size) - 1.0) + 0j
    if spec.kind == "rademacher_complex_xix":
        return (2.0 * rng.integers(0, 2, size=size) - 1.0) * _XIX_PHASE
    values = np.asarray(spec.values, dtype=complex)
    return rng.choice(values, size=size, p=np.asarray(spec.probs, dtype=float))


def sample_diag(spec: EntrySpec, rng: np.random.Generator, size=None):
    """Draw real diagonal entries."""
    scale = math.sqrt(spec.diag_variance)
    if spec.diag_kind == "gaussian_real":
        return scale * rng.standard_normal(size)
    return scale * (2.0 * rng.integers(0, 2, size=size) - 1.0)


def sample_entry(spec: EntrySpec, rng: np.random.Generator) -> complex:
    """Draw a single off-diagonal entry."""
    return complex(sample_offdiag(spec, rng))
