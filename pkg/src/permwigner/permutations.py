"""Symmetric permutations of the entry set [N]^2 and their statistics.

Positions are 0-based ``(row, col)`` pairs throughout.  Named families are
stored as vectorised closed forms, so even ``N = 10^4`` costs O(1) memory;
explicit tables are used for imported or random permutations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import AsymmetricPermutationError, BudgetExceededError, DimensionMismatchError, PermWignerError

log = logging.getLogger(__name__)

NAMED_FAMILIES = ("identity", "transpose", "anti_transpose", "rho", "eta", "zeta")
MAX_TABLE_N = 2048
_ROW_CHUNK_ENTRIES = 1 << 22

IndexMap = Callable[[np.ndarray, np.ndarray], "tuple[np.ndarray, np.ndarray]"]


class EntryPermutation:
    """A bijection of ``[N]^2`` given by a vectorised rule and its inverse.

    Call the object on integer arrays ``(rows, cols)`` to get the image
    positions.  Use :func:`make_named`, :func:`from_table`, :func:`compose`
    or :func:`inverse` to build instances.
    """

    def __init__(self, n: int, forward: IndexMap, backward: IndexMap, name: str = "custom", params: tuple = ()):
        if n < 1:
            raise PermWignerError("dimension must be at least 1")
        self.n = int(n)
        self._forward = forward
        self._backward = backward
        self.name = name
        self.params = tuple(params)

    def __repr__(self):
        params = f", {self.params}" if self.params else ""
        return f"EntryPermutation({self.name}{params}, n={self.n})"

    def __call__(self, rows, cols):
        return self._forward(np.asarray(rows), np.asarray(cols))

    def apply_inverse(self, rows, cols):
        return self._backward(np.asarray(rows), np.asarray(cols))

    @cached_property
    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """Image rows and columns as two ``N x N`` integer arrays."""
        rows, cols = np.indices((self.n, self.n))
        r, c = self(rows, cols)
        return np.ascontiguousarray(r, dtype=np.intp), np.ascontiguousarray(c, dtype=np.intp)

    @cached_property
    def is_symmetric(self) -> bool:
        """Whether the rule commutes with the transpose on all of ``[N]^2``."""
        for rows, cols in _row_blocks(self.n):
            r, c = self(rows, cols)
            rt, ct = self(cols, rows)
            if not (np.array_equal(r, ct) and np.array_equal(c, rt)):
                return False
        return True

    def is_bijective(self) -> bool:
        r, c = self.table
        flat = r.ravel() * self.n + c.ravel()
        if flat.min() < 0 or flat.max() >= self.n * self.n:
            return False
        return bool(np.all(np.bincount(flat, minlength=self.n * self.n) == 1))

    def equals(self, other: "EntryPermutation") -> bool:
        if self.n != other.n:
            return False
        a, b = self.table, other.table
        return bool(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]))

    def require_symmetric(self):
        if not self.is_symmetric:
            raise AsymmetricPermutationError(f"{self!r} does not commute with the transpose")


def _row_blocks(n: int):
    step = max(1, _ROW_CHUNK_ENTRIES // n)
    cols_all = np.arange(n)
    for start in range(0, n, step):
        stop = min(n, start + step)
        rows = np.repeat(np.arange(start, stop), n).reshape(stop - start, n)
        cols = np.broadcast_to(cols_all, (stop - start, n))
        yield rows, cols


# -- named families ---------------------------------------------------------------


def _identity(r, c):
    return r, c


def _transpose(r, c):
    return c, r


def _make_anti(n):
    def anti(r, c):
        return n - 1 - c, n - 1 - r

    return anti


def _rho(r, c):
    # 1-based max(j, k) odd  <=>  0-based max even
    keep = np.maximum(r, c) % 2 == 0
    return np.where(keep, r, c), np.where(keep, c, r)


def _make_zeta(m):
    def zeta(r, c):
        keep = (r + c + 2) % m == 0
        return np.where(keep, r, c), np.where(keep, c, r)

    return zeta


def _cyc_up(x, top):
    """x -> x+1 cyclically on {1, ..., top} (1-based)."""
    return np.where(x < top, x + 1, 1)


def _cyc_down(x, top):
    return np.where(x > 1, x - 1, top)


def _eta_shift(x, col):
    # within the off-diagonal part {1..col-1} of column `col`: odd columns shift up, even down
    return np.where(col % 2 == 1, _cyc_up(x, col - 1), _cyc_down(x, col - 1))


def _eta_unshift(x, col):
    return np.where(col % 2 == 1, _cyc_down(x, col - 1), _cyc_up(x, col - 1))


def _make_eta(n):
    def forward(r, c):
        j, k = r + 1, c + 1
        upper, lower = j < k, j > k
        # guard the shift arguments so unused branches stay in range
        up_j = _eta_shift(np.where(upper, j, 1), np.where(upper, k, 2))
        lo_k = _eta_shift(np.where(lower, k, 1), np.where(lower, j, 2))
        diag = j % n + 1
        out_r = np.where(upper, k, np.where(lower, lo_k, diag))
        out_c = np.where(upper, up_j, np.where(lower, j, diag))
        return out_r - 1, out_c - 1

    def backward(r, c):
        a, b = r + 1, c + 1
        lower, upper = a > b, a < b
        lo = _eta_unshift(np.where(lower, b, 1), np.where(lower, a, 2))
        up = _eta_unshift(np.where(upper, a, 1), np.where(upper, b, 2))
        diag = (a - 2) % n + 1
        out_r = np.where(lower, lo, np.where(upper, b, diag))
        out_c = np.where(lower, a, np.where(upper, up, diag))
        return out_r - 1, out_c - 1

    return forward, backward


def make_named(family: str, n: int, param: int | None = None) -> EntryPermutation:
    """Build one of the named symmetric permutations.

    ``family`` is ``identity``, ``transpose``, ``anti_transpose``, ``rho``,
    ``eta`` or ``zeta``; ``zeta`` needs the modulus ``param >= 1``.
    """
    if n < 1:
        raise PermWignerError("dimension must be at least 1")
    if family == "identity":
        return EntryPermutation(n, _identity, _identity, "identity")
    if family == "transpose":
        return EntryPermutation(n, _transpose, _transpose, "transpose")
    if family == "anti_transpose":
        anti = _make_anti(n)
        return EntryPermutation(n, anti, anti, "anti_transpose")
    if family == "rho":
        return EntryPermutation(n, _rho, _rho, "rho")
    if family == "eta":
        fwd, bwd = _make_eta(n)
        return EntryPermutation(n, fwd, bwd, "eta")
    if family == "zeta":
        if param is None or int(param) < 1:
            raise PermWignerError("zeta needs an integer modulus >= 1")
        z = _make_zeta(int(param))
        return EntryPermutation(n, z, z, "zeta", (int(param),))
    raise PermWignerError(f"unknown permutation family {family!r}; expected one of {NAMED_FAMILIES}")


# -- tables -----------------------------------------------------------------------


def from_table(rows: np.ndarray, cols: np.ndarray, name: str = "table", max_n: int = MAX_TABLE_N) -> EntryPermutation:
    """Wrap explicit image arrays ``rows[j, k], cols[j, k]`` (0-based)."""
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.shape != cols.shape:
        raise DimensionMismatchError("table must be two N x N arrays")
    n = rows.shape[0]
    if n > max_n:
        raise BudgetExceededError(f"table-backed permutations are limited to N <= {max_n}")
    flat = rows.ravel() * n + cols.ravel()
    if flat.min() < 0 or flat.max() >= n * n or np.any(np.bincount(flat, minlength=n * n) != 1):
        raise PermWignerError("table is not a bijection of [N]^2")
    inv_r = np.empty_like(rows)
    inv_c = np.empty_like(cols)
    src_r, src_c = np.indices((n, n))
    inv_r[rows, cols] = src_r
    inv_c[rows, cols] = src_c

    def forward(r, c):
        return rows[r, c], cols[r, c]

    def backward(r, c):
        return inv_r[r, c], inv_c[r, c]

    perm = EntryPermutation(n, forward, backward, name)
    perm.__dict__["table"] = (rows, cols)
    return perm


def random_symmetric(n: int, rng: np.random.Generator) -> EntryPermutation:
    """Uniformly random symmetric permutation of ``[N]^2``.

    The diagonal is permuted among itself; unordered off-diagonal pairs are
    permuted among themselves with a random orientation each.
    """
    rows = np.empty((n, n), dtype=np.intp)
    cols = np.empty((n, n), dtype=np.intp)
    d = rng.permutation(n)
    rows[np.arange(n), np.arange(n)] = d
    cols[np.arange(n), np.arange(n)] = d
    iu, ju = np.triu_indices(n, 1)
    order = rng.permutation(iu.size)
    flip = rng.integers(0, 2, size=iu.size).astype(bool)
    ti, tj = iu[order], ju[order]
    ti, tj = np.where(flip, tj, ti), np.where(flip, ti, tj)
    rows[iu, ju], cols[iu, ju] = ti, tj
    rows[ju, iu], cols[ju, iu] = tj, ti
    return from_table(rows, cols, name="random_symmetric")


def write_table(perm: EntryPermutation, path: str | Path):
    """Write ``N`` then ``N^2`` lines ``j k → j' k'`` (1-based)."""
    r, c = perm.table
    n = perm.n
    lines = [str(n)]
    for j in range(n):
        for k in range(n):
            lines.append(f"{j + 1} {k + 1} → {r[j, k] + 1} {c[j, k] + 1}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_table(path: str | Path, max_n: int = MAX_TABLE_N) -> EntryPermutation:
    text = Path(path).read_text(encoding="utf-8").split("\n")
    text = [ln.strip() for ln in text if ln.strip()]
    if not text:
        raise PermWignerError(f"{path}: empty permutation file")
    n = int(text[0])
    if len(text) - 1 != n * n:
        raise PermWignerError(f"{path}: expected {n * n} entry lines, found {len(text) - 1}")
    rows = np.full((n, n), -1, dtype=np.intp)
    cols = np.full((n, n), -1, dtype=np.intp)
    for lineno, line in enumerate(text[1:], start=2):
        left, sep, right = line.replace("->", "→").partition("→")
        if not sep:
            raise PermWignerError(f"{path}:{lineno}: missing arrow")
        try:
            j, k = (int(t) - 1 for t in left.split())
            a, b = (int(t) - 1 for t in right.split())
        except ValueError as exc:
            raise PermWignerError(f"{path}:{lineno}: malformed line {line!r}") from exc
        if not (0 <= j < n and 0 <= k < n):
            raise PermWignerError(f"{path}:{lineno}: index out of range")
        rows[j, k], cols[j, k] = a, b
    if np.any(rows < 0):
        raise PermWignerError(f"{path}: some positions have no image")
    return from_table(rows, cols, name=Path(path).stem, max_n=max_n)


# -- algebra ----------------------------------------------------------------------


def compose(outer: EntryPermutation, inner: EntryPermutation) -> EntryPermutation:
    """``outer ∘ inner``: apply ``inner`` first."""
    if outer.n != inner.n:
        raise DimensionMismatchError(f"cannot compose N={outer.n} with N={inner.n}")

    def forward(r, c):
        return outer(*inner(r, c))

    def backward(r, c):
        return inner.apply_inverse(*outer.apply_inverse(r, c))

    return EntryPermutation(outer.n, forward, backward, f"({outer.name})∘({inner.name})")


def inverse(perm: EntryPermutation) -> EntryPermutation:
    return EntryPermutation(perm.n, perm._backward, perm._forward, f"inv({perm.name})", perm.params)


def relative(perm: EntryPermutation, other: EntryPermutation) -> EntryPermutation:
    """``other^{-1} ∘ perm``, the permutation that governs the pair's covariance."""
    return compose(inverse(other), perm)


# -- statistics -------------------------------------------------------------------


@dataclass(frozen=True)
class PermStats:
    """Exact fixed-point, transposed-point, grid and triple counts of a permutation."""

    n: int
    fp_count: int
    tp_count: int
    grid_count: int
    fp_row_min: int
    fp_row_max: int
    tp_row_min: int
    tp_row_max: int
    gamma_count: int
    chi_count: int
    fp_rows: np.ndarray = field(repr=False, compare=False)
    tp_rows: np.ndarray = field(repr=False, compare=False)

    @property
    def fp_fraction(self) -> float:
        return self.fp_count / self.n**2

    @property
    def tp_fraction(self) -> float:
        return self.tp_count / self.n**2

    @property
    def grid_fraction(self) -> float:
        return self.grid_count / self.n**2


def stats(perm: EntryPermutation) -> PermStats:
    """Scan all ``N^2`` positions once and count FP, TP, Grid, Gamma and chi.

    ``gamma_count`` counts injective triples ``(j, k, l)`` with
    ``perm(j, k) = (l, k)`` and ``chi_count`` those with ``perm(j, k) = (k, l)``;
    each position contributes at most one triple, so both are O(N^2).
    """
    n = perm.n
    fp_rows = np.zeros(n, dtype=np.int64)
    tp_rows = np.zeros(n, dtype=np.int64)
    grid = gamma = chi = 0
    for j, k in _row_blocks(n):
        a, b = perm(j, k)
        fixed = (a == j) & (b == k)
        transposed = (a == k) & (b == j)
        fp_rows[j[:, 0]] = fixed.sum(axis=1)
        tp_rows[j[:, 0]] = transposed.sum(axis=1)
        touches = (a == j) | (a == k) | (b == j) | (b == k)
        grid += int(np.count_nonzero(touches & ~fixed & ~transposed))
        off = j != k
        gamma += int(np.count_nonzero(off & (b == k) & (a != j) & (a != k)))
        chi += int(np.count_nonzero(off & (a == k) & (b != j) & (b != k)))
    return PermStats(
        n=n,
        fp_count=int(fp_rows.sum()),
        tp_count=int(tp_rows.sum()),
        grid_count=grid,
        fp_row_min=int(fp_rows.min()),
        fp_row_max=int(fp_rows.max()),
        tp_row_min=int(tp_rows.min()),
        tp_row_max=int(tp_rows.max()),
        gamma_count=gamma,
        chi_count=chi,
        fp_rows=fp_rows,
        tp_rows=tp_rows,
    )


# -- hypothesis diagnostics --------------------------------------------------------


@dataclass(frozen=True)
class PairDiagnostics:
    """Finite-N diagnostics of the relative permutation for the label pair ``(i, i2)``."""

    n: int
    i: object
    i2: object
    a: float
    b: float
    fp_gap: float
    tp_gap: float
    grid_fraction: float
    combined_min: complex
    combined_max: complex
    gamma_minus_chi: float
    k_pred: complex
    j_pred: complex

    @property
    def combined_gap(self) -> float:
        return abs(self.combined_max - self.combined_min)


@dataclass
class ConditionReport:
    beta: complex
    rows: list[PairDiagnostics]
    homogeneity_tol: float = 0.1
    grid_tol: float = 0.05

    def series(self, i, i2, attr: str) -> list[tuple[int, object]]:
        return [(d.n, getattr(d, attr)) for d in self.rows if d.i == i and d.i2 == i2]

    def flags(self) -> dict[tuple, dict[str, bool]]:
        """Judgement at the largest N for each pair: homogeneous rows, off the grid."""
        out = {}
        for d in self.rows:
            key = (d.i, d.i2)
            if key in out and out[key]["n"] >= d.n:
                continue
            out[key] = {
                "n": d.n,
                "homogeneous": max(d.fp_gap, d.tp_gap) <= self.homogeneity_tol,
                "combined_homogeneous": d.combined_gap <= self.homogeneity_tol,
                "off_grid": d.grid_fraction <= self.grid_tol,
            }
        return out

    def to_records(self) -> list[dict]:
        recs = []
        for d in self.rows:
            recs.append(
                {
                    "N": d.n,
                    "i": d.i,
                    "i2": d.i2,
                    "a": d.a,
                    "b": d.b,
                    "fp_gap": d.fp_gap,
                    "tp_gap": d.tp_gap,
                    "grid_fraction": d.grid_fraction,
                    "combined_min": [d.combined_min.real, d.combined_min.imag],
                    "combined_max": [d.combined_max.real, d.combined_max.imag],
                    "gamma_minus_chi": d.gamma_minus_chi,
                    "K_pred": [d.k_pred.real, d.k_pred.imag],
                    "J_pred": [d.j_pred.real, d.j_pred.imag],
                }
            )
        return recs


FamilyLike = Mapping[object, Callable[[int], EntryPermutation]] | Sequence[Callable[[int], EntryPermutation]]


def condition_report(family: FamilyLike, beta: complex, n_list: Iterable[int]) -> ConditionReport:
    """Evaluate the covariance hypotheses for every ordered label pair and every N.

    ``family`` maps labels to factories ``N -> EntryPermutation`` (a sequence
    is indexed from 0).  For each pair the relative permutation
    ``perm[i2]^{-1} ∘ perm[i]`` is scanned.
    """
    if not isinstance(family, Mapping):
        family = dict(enumerate(family))
    beta = complex(beta)
    rows: list[PairDiagnostics] = []
    for n in n_list:
        perms = {}
        for label, factory in family.items():
            p = factory(n)
            if p.n != n:
                raise DimensionMismatchError(f"factory for {label!r} returned N={p.n}, expected {n}")
            p.require_symmetric()
            perms[label] = p
        for i, pi in perms.items():
            for i2, pi2 in perms.items():
                s = stats(relative(pi, pi2))
                nn = float(n * n)
                combined = (s.fp_rows + beta * s.tp_rows) / n
                order = np.argsort(combined.real, kind="stable")
                a, b = s.fp_count / nn, s.tp_count / nn
                rows.append(
                    PairDiagnostics(
                        n=n,
                        i=i,
                        i2=i2,
                        a=a,
                        b=b,
                        fp_gap=(s.fp_row_max - s.fp_row_min) / n,
                        tp_gap=(s.tp_row_max - s.tp_row_min) / n,
                        grid_fraction=s.grid_count / nn,
                        combined_min=complex(combined[order[0]]),
                        combined_max=complex(combined[order[-1]]),
                        gamma_minus_chi=(s.gamma_count - s.chi_count) / nn,
                        k_pred=a + b * beta,
                        j_pred=a * beta + b,
                    )
                )
    return ConditionReport(beta=beta, rows=rows)


def named_factory(family: str, param: int | None = None) -> Callable[[int], EntryPermutation]:
    def factory(n: int) -> EntryPermutation:
        return make_named(family, n, param)

    factory.__name__ = f"{family}_factory"
    return factory
