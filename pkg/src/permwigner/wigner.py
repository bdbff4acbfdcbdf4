"""Wigner matrices, entry-permuted copies and mixed trace moments.

``tr`` is always the normalised trace ``Tr / N``.  Monte-Carlo estimates use
one shared sample of ``W`` per trial for every permuted copy in the word.
The exact oracle sums over all index maps and evaluates each expectation by
grouping entries into conjugate classes ``{(a, b), (b, a)}``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .entries import EntrySpec, moment_tables, sample_diag, sample_offdiag
from .errors import BudgetExceededError, DimensionMismatchError, PermWignerError
from .permutations import EntryPermutation

MAX_N = 16384
DEFAULT_MAP_BUDGET = 10**7
_CHUNK_MAPS = 1 << 16
_BATCH_ENTRIES = 1 << 21


@dataclass(frozen=True)
class WignerMatrix:
    """An ``N x N`` Hermitian matrix with entries ``X(j, k) / sqrt(N)``."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.n, self.n):
            raise DimensionMismatchError(f"entries have shape {self.entries.shape}, expected {(self.n, self.n)}")
        self.entries.setflags(write=False)


def _as_mapping(perms) -> dict:
    if isinstance(perms, Mapping):
        return dict(perms)
    return dict(enumerate(perms))


def _sample_batch(spec: EntrySpec, n: int, batch: int, rng: np.random.Generator) -> np.ndarray:
    iu, ju = np.triu_indices(n, 1)
    dtype = float if spec.is_real else complex
    out = np.zeros((batch, n, n), dtype=dtype)
    vals = sample_offdiag(spec, rng, size=(batch, iu.size)) / math.sqrt(n)
    if spec.is_real:
        vals = vals.real
    out[:, iu, ju] = vals
    out[:, ju, iu] = np.conj(vals)
    d = np.arange(n)
    out[:, d, d] = sample_diag(spec, rng, size=(batch, n)) / math.sqrt(n)
    return out


def sample_wigner(spec: EntrySpec, n: int, seed=None) -> WignerMatrix:
    """Sample a Wigner matrix.  ``seed`` may be an int, a SeedSequence or a Generator."""
    if n < 1 or n > MAX_N:
        raise PermWignerError(f"N must lie in [1, {MAX_N}]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return WignerMatrix(n, _sample_batch(spec, n, 1, rng)[0])


def permute_entries(w: WignerMatrix | np.ndarray, perm: EntryPermutation) -> WignerMatrix:
    """``result(j, k) = W(perm(j, k))``."""
    entries = w.entries if isinstance(w, WignerMatrix) else np.asarray(w)
    n = entries.shape[-1]
    if perm.n != n:
        raise DimensionMismatchError(f"permutation has N={perm.n}, matrix has N={n}")
    perm.require_symmetric()
    r, c = perm.table
    return WignerMatrix(n, entries[r, c])


def _check_word(word: Sequence, perms: dict):
    if len(word) == 0:
        raise PermWignerError("word must be nonempty")
    missing = [lab for lab in word if lab not in perms]
    if missing:
        raise PermWignerError(f"word uses unknown labels {sorted(set(map(str, missing)))}")


def _batched_traces(mats: Sequence[np.ndarray]) -> np.ndarray:
    # left-to-right product; the last factor is folded into the trace
    n = mats[0].shape[-1]
    if len(mats) == 1:
        return np.trace(mats[0], axis1=-2, axis2=-1) / n
    prod = mats[0]
    for m in mats[1:-1]:
        prod = prod @ m
    return np.einsum("bij,bji->b", prod, mats[-1]) / n


def trace_moment_samples(spec: EntrySpec, perms, word: Sequence, n: int, trials: int, seed) -> np.ndarray:
    """Per-trial values of ``tr(M_{word[0]} ... M_{word[-1]})``."""
    perms = _as_mapping(perms)
    _check_word(word, perms)
    if n < 1 or n > MAX_N:
        raise PermWignerError(f"N must lie in [1, {MAX_N}]")
    tables = {}
    for label in set(word):
        p = perms[label]
        if p.n != n:
            raise DimensionMismatchError(f"permutation {label!r} has N={p.n}, expected {n}")
        p.require_symmetric()
        tables[label] = p.table
    batch = max(1, min(trials, _BATCH_ENTRIES // (n * n)))
    n_batches = -(-trials // batch)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    values = []
    done = 0
    for child in children:
        size = min(batch, trials - done)
        w = _sample_batch(spec, n, size, np.random.default_rng(child))
        # fancy indexing yields strided output; BLAS needs contiguous operands
        copies = {lab: np.ascontiguousarray(w[:, r, c]) for lab, (r, c) in tables.items()}
        values.append(_batched_traces([copies[lab] for lab in word]))
        done += size
    return np.concatenate(values).astype(complex)


def trace_moment_mc(spec: EntrySpec, perms, word: Sequence, n: int, trials: int, seed) -> tuple[complex, float]:
    """Sample mean and standard error of ``tr`` of the permuted-copy product."""
    if trials < 2:
        raise PermWignerError("trials must be at least 2")
    vals = trace_moment_samples(spec, perms, word, n, trials, seed)
    mean = complex(vals.mean())
    spread = float(np.sum(np.abs(vals - mean) ** 2) / (trials - 1))
    return mean, math.sqrt(spread / trials)


# -- exact oracle -----------------------------------------------------------------


def expected_entry_products(rows: np.ndarray, cols: np.ndarray, off: np.ndarray, diag: np.ndarray) -> np.ndarray:
    """``E[prod_e X(rows[:, e], cols[:, e])]`` for each row of position arrays.

    Positions ``(a, b)`` with ``a < b`` contribute ``X``, with ``a > b`` its
    conjugate, with ``a == b`` a diagonal entry.  ``off`` and ``diag`` are the
    moment tables from :func:`permwigner.entries.moment_tables`.
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    count, m = rows.shape
    if m == 0:
        return np.ones(count, dtype=complex)
    lo = np.minimum(rows, cols).astype(np.int64)
    hi = np.maximum(rows, cols).astype(np.int64)
    key = lo * (int(hi.max()) + 1) + hi
    is_diag = rows == cols
    holo = (rows < cols) | is_diag
    same = key[:, :, None] == key[:, None, :]
    p = np.count_nonzero(same & holo[:, None, :], axis=2)
    q = np.count_nonzero(same & ~holo[:, None, :], axis=2)
    earlier = np.tril(np.ones((m, m), dtype=bool), -1)
    first = ~np.any(same & earlier[None, :, :], axis=2)
    factor = np.where(is_diag, diag[p + q], off[p, q])
    factor = np.where(first, factor, 1.0)
    return np.prod(factor, axis=1)


def iter_maps(n_vertices: int, n: int, chunk: int = _CHUNK_MAPS):
    """Yield all maps ``[n_vertices] -> [n]`` as integer arrays, chunk by chunk."""
    total = n**n_vertices
    shape = (n,) * n_vertices
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        if n_vertices == 0:
            yield np.zeros((idx.size, 0), dtype=np.intp)
        else:
            yield np.stack(np.unravel_index(idx, shape), axis=1)


def trace_moment_exact(spec: EntrySpec, perms, word: Sequence, n: int, budget: int = DEFAULT_MAP_BUDGET) -> complex:
    """Exact ``E[tr(M_{word[0]} ... M_{word[-1]})]`` at finite ``N``.

    Sums over all ``N^len(word)`` index cycles; raises
    :class:`BudgetExceededError` beyond ``budget`` maps.
    """
    perms = _as_mapping(perms)
    _check_word(word, perms)
    length = len(word)
    if n**length > budget:
        raise BudgetExceededError(f"N^n = {n}^{length} exceeds the map budget {budget}")
    for label in set(word):
        if perms[label].n != n:
            raise DimensionMismatchError(f"permutation {label!r} has N={perms[label].n}, expected {n}")
    off, diag = moment_tables(spec, length)
    total = 0j
    for phi in iter_maps(length, n):
        rows = np.empty_like(phi)
        cols = np.empty_like(phi)
        for pos, label in enumerate(word):
            rows[:, pos], cols[:, pos] = perms[label](phi[:, pos], phi[:, (pos + 1) % length])
        total += complex(expected_entry_products(rows, cols, off, diag).sum())
    return total / n ** (1 + length / 2)


# -- records ----------------------------------------------------------------------

RECORD_FIELDS = ("word", "N", "trials", "estimate_re", "estimate_im", "stderr", "seed")


def moment_record(word, n, trials, estimate, stderr, seed) -> dict:
    return {
        "word": " ".join(str(w) for w in word),
        "N": n,
        "trials": trials,
        "estimate_re": complex(estimate).real,
        "estimate_im": complex(estimate).imag,
        "stderr": stderr,
        "seed": seed,
    }


def write_moment_records(records: Sequence[dict], path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        writer.writeheader()
        for rec in records:
            writer.writerow({k: rec[k] for k in RECORD_FIELDS})
