"""Noncrossing partitions, semicircular moments and free cumulants.

Partitions are tuples of sorted 0-based blocks.  Moment formulas sum over
noncrossing pair partitions; cumulants are extracted by recursive inversion of
the moment-cumulant relation over the noncrossing lattice.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import BudgetExceededError, PermWignerError

log = logging.getLogger(__name__)

MAX_NC = 12
MAX_NC2 = 16
MAX_CUMULANT_ORDER = 8
MAX_A1A2_LENGTH = 8

Partition = tuple[tuple[int, ...], ...]


def catalan(m: int) -> int:
    from math import comb

    return comb(2 * m, m) // (m + 1)


def is_noncrossing(blocks: Iterable[Sequence[int]]) -> bool:
    """No ``a < b < c < d`` with ``a, c`` in one block and ``b, d`` in another."""
    owner = {}
    for label, block in enumerate(blocks):
        for x in block:
            owner[x] = label
    pts = sorted(owner)
    for a, b, c, d in itertools.combinations(pts, 4):
        if owner[a] == owner[c] and owner[b] == owner[d] and owner[a] != owner[b]:
            return False
    return True


@dataclass(frozen=True)
class NCPartition:
    """A noncrossing partition of ``{0, ..., n-1}``."""

    blocks: Partition
    n: int = field(init=False)

    def __post_init__(self):
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        blocks = tuple(sorted(blocks))
        flat = sorted(x for b in blocks for x in b)
        if any(len(b) == 0 for b in blocks) or flat != list(range(len(flat))):
            raise PermWignerError(f"{self.blocks!r} is not a partition of [0, n)")
        if not is_noncrossing(blocks):
            raise PermWignerError(f"{self.blocks!r} is crossing")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "n", len(flat))


@lru_cache(maxsize=None)
def _nc_of_range(lo: int, hi: int) -> tuple[Partition, ...]:
    """All noncrossing partitions of ``{lo, ..., hi-1}``."""
    if lo >= hi:
        return ((),)
    return tuple(tuple(sorted(p)) for p in _nc_with_block((lo,), lo + 1, hi))


def _nc_with_block(block: tuple[int, ...], nxt: int, hi: int):
    # the block holding ``block[0]`` either stops here, leaving [nxt, hi) free,
    # or continues at some j, with the gap [nxt, j) partitioned on its own
    for rest in _nc_of_range(nxt, hi):
        yield (block,) + rest
    for j in range(nxt, hi):
        for gap in _nc_of_range(nxt, j):
            for tail in _nc_with_block(block + (j,), j + 1, hi):
                yield gap + tail


def enumerate_nc(n: int) -> list[NCPartition]:
    """All noncrossing partitions of ``{0, ..., n-1}`` (``n <= 12``)."""
    if n > MAX_NC:
        raise BudgetExceededError(f"enumerate_nc is limited to n <= {MAX_NC}")
    if n < 0:
        raise PermWignerError("n must be nonnegative")
    return [NCPartition(p) for p in _nc_of_range(0, n)]


@lru_cache(maxsize=None)
def _nc2_of_range(lo: int, hi: int) -> tuple[Partition, ...]:
    if lo >= hi:
        return ((),)
    if (hi - lo) % 2:
        return ()
    out = []
    for partner in range(lo + 1, hi, 2):
        for inside in _nc2_of_range(lo + 1, partner):
            for outside in _nc2_of_range(partner + 1, hi):
                out.append(((lo, partner),) + inside + outside)
    return tuple(out)


def enumerate_nc2(n: int) -> list[Partition]:
    """All noncrossing pair partitions of ``{0, ..., n-1}`` (``n <= 16``)."""
    if n > MAX_NC2:
        raise BudgetExceededError(f"enumerate_nc2 is limited to n <= {MAX_NC2}")
    if n < 0:
        raise PermWignerError("n must be nonnegative")
    return list(_nc2_of_range(0, n))


# -- covariance and semicircular moments ---------------------------------------------


class CovarianceSpec:
    """Covariance ``K`` and pseudocovariance ``J`` over a list of labels.

    ``K`` must be symmetric; positive semidefiniteness is checked and exposed
    as :attr:`is_psd` rather than enforced, so indefinite matrices can still be
    fed to the moment formula for diagnostics.
    """

    def __init__(self, k, j=None, labels: Sequence[Hashable] | None = None):
        k = np.atleast_2d(np.asarray(k, dtype=float))
        if k.shape[0] != k.shape[1]:
            raise PermWignerError("K must be square")
        j = np.zeros_like(k) if j is None else np.atleast_2d(np.asarray(j, dtype=float))
        if j.shape != k.shape:
            raise PermWignerError("J must have the same shape as K")
        if not np.allclose(k, k.T, atol=1e-12) or not np.allclose(j, j.T, atol=1e-12):
            raise PermWignerError("K and J must be symmetric")
        self.k = k
        self.j = j
        self.labels = tuple(range(k.shape[0])) if labels is None else tuple(labels)
        if len(self.labels) != k.shape[0]:
            raise PermWignerError("one label per row of K is required")
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self.is_psd = bool(np.linalg.eigvalsh(k).min() >= -1e-10)
        if not self.is_psd:
            log.warning("covariance K is not positive semidefinite; moments are diagnostic only")

    @classmethod
    def from_ab(cls, a, b, beta: float, labels=None) -> "CovarianceSpec":
        """``K = a + b beta`` and ``J = a beta + b`` from FP/TP proportions."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return cls(a + b * beta, a * beta + b, labels)

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise PermWignerError(f"unknown label {label!r}") from None

    def K(self, i, i2) -> float:
        return float(self.k[self.index(i), self.index(i2)])

    def J(self, i, i2) -> float:
        return float(self.j[self.index(i), self.index(i2)])


def _as_cov(cov) -> CovarianceSpec:
    return cov if isinstance(cov, CovarianceSpec) else CovarianceSpec(cov)


def semicircular_moment(word: Sequence[Hashable], cov) -> float:
    """``phi(s_{w_1} ... s_{w_n})`` for a semicircular family of covariance ``K``."""
    cov = _as_cov(cov)
    idx = [cov.index(w) for w in word]
    total = 0.0
    for pairing in enumerate_nc2(len(idx)):
        term = 1.0
        for a, b in pairing:
            term *= cov.k[idx[a], idx[b]]
            if term == 0.0:
                break
        total += term
    return total


# -- *-families -----------------------------------------------------------------------

StarLetter = tuple[Hashable, bool]


class StarCovariance:
    """Second free cumulants of a *-family; higher cumulants vanish.

    Keys are ``(label, starred)`` letters.  Entries not listed are zero.  The
    table must satisfy ``kappa[x, y] = conj(kappa[y*, x*])``.
    """

    def __init__(self, table: Mapping[tuple[StarLetter, StarLetter], complex]):
        self.table = dict(table)
        for (x, y), val in self.table.items():
            mirror = self.table.get(((y[0], not y[1]), (x[0], not x[1])), 0)
            if abs(complex(mirror) - complex(val).conjugate()) > 1e-12:
                raise PermWignerError(f"kappa[{x}, {y}] breaks the star symmetry")

    def __getitem__(self, key):
        return self.table.get(key, 0)

    @classmethod
    def free_family(cls, semicircular=(), circular=()) -> "StarCovariance":
        """*-free standard semicircular and standard circular elements."""
        table = {}
        for s in semicircular:
            table[((s, False), (s, False))] = 1
            table[((s, True), (s, True))] = 1
            table[((s, False), (s, True))] = 1
            table[((s, True), (s, False))] = 1
        for c in circular:
            table[((c, False), (c, True))] = 1
            table[((c, True), (c, False))] = 1
        return cls(table)


def star_nc2_moment(word: Sequence[StarLetter], kappa: StarCovariance):
    """``phi`` of a word in a *-family whose only nonzero cumulants are of order 2."""
    total = 0
    for pairing in enumerate_nc2(len(word)):
        term = 1
        for a, b in pairing:
            term *= kappa[(word[a], word[b])]
            if term == 0:
                break
        total += term
    return total


_S = {1: ("s1", False), 2: ("s2", False), 3: ("s3", False)}


def _c(i, star=False):
    return (f"c{i}", star)


# Entries of sqrt(3) A_1 and sqrt(3) A_2.
A1 = (
    (_S[1], _c(1), _c(2)),
    (_c(1, True), _S[2], _c(3)),
    (_c(2, True), _c(3, True), _S[3]),
)
A2 = (
    (_S[3], _c(3), _c(1)),
    (_c(3, True), _S[1], _c(2)),
    (_c(1, True), _c(2, True), _S[2]),
)
A1A2_KAPPA = StarCovariance.free_family(semicircular=("s1", "s2", "s3"), circular=("c1", "c2", "c3"))


def a1a2_example_moment(word: Sequence[int]) -> Fraction:
    """``(tr ⊗ phi)`` of a word in the 3x3 operator matrices ``A_1, A_2``.

    ``word`` is a sequence over ``{1, 2}``.  The matrix trace is expanded over
    all ``3^n`` index cycles and each scalar word is evaluated exactly.
    """
    n = len(word)
    if n > MAX_A1A2_LENGTH:
        raise BudgetExceededError(f"word length is limited to {MAX_A1A2_LENGTH}")
    mats = {1: A1, 2: A2}
    if any(w not in mats for w in word):
        raise PermWignerError("words are over the letters 1 and 2")
    if n == 0:
        return Fraction(1)
    if n % 2:
        return Fraction(0)
    total = 0
    for idx in itertools.product(range(3), repeat=n):
        letters = [mats[w][idx[p]][idx[(p + 1) % n]] for p, w in enumerate(word)]
        total += star_nc2_moment(letters, A1A2_KAPPA)
    # 1/3 from tr and (1/sqrt(3))^n from the scaling
    return Fraction(total, 3 ** (n // 2 + 1))


# -- free cumulants -------------------------------------------------------------------


def _restrict(word: tuple, block: Sequence[int]) -> tuple:
    return tuple(word[i] for i in block)


def free_cumulants_from_moments(
    moment: Callable[[tuple], complex], alphabet: Sequence[Hashable], max_order: int
) -> dict[tuple, complex]:
    """Mixed free cumulants ``kappa_n[w]`` for all words ``w`` up to ``max_order``.

    Uses ``kappa_n[w] = phi(w) - sum_{pi != 1_n} prod_B kappa[w|_B]``, processing
    words by increasing length.
    """
    if max_order > MAX_CUMULANT_ORDER:
        raise BudgetExceededError(f"cumulant order is limited to {MAX_CUMULANT_ORDER}")
    kappa: dict[tuple, complex] = {}
    for length in range(1, max_order + 1):
        partitions = [p for p in enumerate_nc(length) if len(p.blocks) > 1]
        for word in itertools.product(alphabet, repeat=length):
            acc = moment(word)
            for p in partitions:
                term = 1
                for block in p.blocks:
                    term *= kappa[_restrict(word, block)]
                    if term == 0:
                        break
                acc -= term
            kappa[word] = acc
    return kappa


def moments_from_cumulants(
    kappa: Mapping[tuple, complex], alphabet: Sequence[Hashable], max_order: int
) -> dict[tuple, complex]:
    """``phi(w) = sum_{pi in NC} prod_B kappa[w|_B]`` for all words up to ``max_order``."""
    if max_order > MAX_CUMULANT_ORDER:
        raise BudgetExceededError(f"moment order is limited to {MAX_CUMULANT_ORDER}")
    out = {}
    for length in range(1, max_order + 1):
        partitions = enumerate_nc(length)
        for word in itertools.product(alphabet, repeat=length):
            acc = 0
            for p in partitions:
                term = 1
                for block in p.blocks:
                    term *= kappa[_restrict(word, block)]
                acc += term
            out[word] = acc
    return out
