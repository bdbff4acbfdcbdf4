import csv
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permwigner.entries import EntrySpec, moment_tables
from permwigner.errors import BudgetExceededError, DimensionMismatchError, PermWignerError
from permwigner.permutations import make_named, random_symmetric
from permwigner.wigner import (
    expected_entry_products,
    iter_maps,
    moment_record,
    permute_entries,
    sample_wigner,
    trace_moment_exact,
    trace_moment_mc,
    trace_moment_samples,
    write_moment_records,
)


def enumerate_two_point(n, values, diag_values):
    """Every Hermitian matrix whose entries take one of two equally likely values."""
    iu, ju = np.triu_indices(n, 1)
    for off in itertools.product(values, repeat=iu.size):
        for dg in itertools.product(diag_values, repeat=n):
            x = np.zeros((n, n), dtype=complex)
            x[iu, ju] = off
            x[ju, iu] = np.conj(off)
            x[np.arange(n), np.arange(n)] = dg
            yield x / math.sqrt(n)


def enumerated_moment(n, perms, word, values):
    total, count = 0j, 0
    for w in enumerate_two_point(n, values, (1.0, -1.0)):
        prod = np.eye(n, dtype=complex)
        for lab in word:
            r, c = perms[lab].table
            prod = prod @ w[r, c]
        total += np.trace(prod) / n
        count += 1
    return total / count


@pytest.mark.parametrize("kind", ["rademacher_real", "rademacher_complex_xix"])
@pytest.mark.parametrize("n", [2, 3])
def test_exact_oracle_matches_full_enumeration(kind, n):
    rng = np.random.default_rng(n)
    perms = {"a": random_symmetric(n, rng), "b": random_symmetric(n, rng)}
    spec = EntrySpec(kind=kind, diag_kind="rademacher_real")
    phase = 1.0 if kind == "rademacher_real" else (1 + 1j) / math.sqrt(2)
    for length in range(1, 5):
        for word in itertools.product("ab", repeat=length):
            want = enumerated_moment(n, perms, word, (phase, -phase))
            assert trace_moment_exact(spec, perms, word, n) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("n,v", [(3, 1.0), (3, 2.0), (5, 0.0)])
def test_second_moment_closed_form(n, v):
    spec = EntrySpec.gaussian(0.3, diag_variance=v)
    got = trace_moment_exact(spec, [make_named("identity", n)], [0, 0], n)
    assert got == pytest.approx((n - 1 + v) / n)


def test_exact_fourth_moment_of_gue_like():
    # beta = 0, unit diagonal: E tr W^4 = 2 + 1/N^2
    n = 4
    got = trace_moment_exact(EntrySpec.gaussian(0), [make_named("identity", n)], [0] * 4, n)
    assert got.real == pytest.approx(2 + 1 / n**2)


def test_sample_is_hermitian_with_real_diagonal():
    w = sample_wigner(EntrySpec.gaussian(0.2 + 0.4j), 30, 5).entries
    assert np.allclose(w, w.conj().T)
    assert np.all(np.diag(w).imag == 0)
    with pytest.raises(ValueError):
        w[0, 0] = 1


def test_permuted_copy_is_hermitian():
    n = 20
    w = sample_wigner(EntrySpec.gaussian(0.5j), n, 1)
    for family in ("rho", "eta", "anti_transpose"):
        m = permute_entries(w, make_named(family, n)).entries
        assert np.allclose(m, m.conj().T)


def test_permute_dimension_checked():
    w = sample_wigner(EntrySpec.gaussian(0), 4, 0)
    with pytest.raises(DimensionMismatchError):
        permute_entries(w, make_named("rho", 5))


def test_seed_reproducibility():
    spec = EntrySpec.gaussian(-0.5)
    perms = [make_named("identity", 40), make_named("rho", 40)]
    a = trace_moment_samples(spec, perms, [0, 1, 0, 1], 40, 30, 9)
    b = trace_moment_samples(spec, perms, [0, 1, 0, 1], 40, 30, 9)
    c = trace_moment_samples(spec, perms, [0, 1, 0, 1], 40, 30, 10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_mc_matches_exact_small():
    n = 4
    spec = EntrySpec.gaussian(0.5)
    perms = {"i": make_named("identity", n), "r": make_named("rho", n)}
    exact = trace_moment_exact(spec, perms, "irir", n)
    est, se = trace_moment_mc(spec, perms, "irir", n, 4000, 3)
    assert abs(est - exact) <= 4 * se


def test_word_validation():
    perms = {"i": make_named("identity", 3)}
    with pytest.raises(PermWignerError):
        trace_moment_exact(EntrySpec(), perms, "ij", 3)
    with pytest.raises(PermWignerError):
        trace_moment_mc(EntrySpec(), perms, "", 3, 10, 0)
    with pytest.raises(BudgetExceededError):
        trace_moment_exact(EntrySpec(), perms, "iiiiii", 30, budget=10**6)


def test_iter_maps_enumerates_everything():
    maps = np.concatenate(list(iter_maps(3, 4, chunk=7)))
    assert maps.shape == (64, 3)
    assert len({tuple(m) for m in maps}) == 64


def _naive_expectation(rows, cols, off, diag):
    classes = {}
    for a, b in zip(rows, cols):
        key = (min(a, b), max(a, b))
        p, q = classes.get(key, (0, 0))
        if a <= b:
            p += 1
        else:
            q += 1
        classes[key] = (p, q)
    out = 1
    for (a, b), (p, q) in classes.items():
        out *= diag[p + q] if a == b else off[p, q]
    return out


@settings(max_examples=60, deadline=None)
@given(
    positions=st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=6),
    beta=st.sampled_from([0, 0.5, -1, 1j]),
)
def test_entry_products_match_naive(positions, beta):
    off, diag = moment_tables(EntrySpec.gaussian(beta, diag_variance=1.5), 6)
    rows = np.array([[a for a, _ in positions]])
    cols = np.array([[b for _, b in positions]])
    got = expected_entry_products(rows, cols, off, diag)[0]
    assert got == pytest.approx(_naive_expectation(rows[0], cols[0], off, diag), abs=1e-12)


def test_records_csv(tmp_path):
    rec = moment_record([1, 2, 1, 2], 100, 10, 1.5 + 0.1j, 0.01, 7)
    path = tmp_path / "m.csv"
    write_moment_records([rec], path)
    rows = list(csv.DictReader(path.open()))
    assert rows[0]["word"] == "1 2 1 2"
    assert float(rows[0]["estimate_im"]) == pytest.approx(0.1)
