import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from permwigner.errors import DimensionMismatchError, PermWignerError
from permwigner.spectra import (
    NU_SP_EDGE,
    SpectrumSample,
    anticommutator,
    eigenvalues_hermitian,
    histogram,
    ks_distance,
    nu_sp_cdf,
    nu_sp_cdf_fast,
    nu_sp_density,
    nu_sp_quantile,
    write_two_column,
)


def random_hermitian(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


def test_anticommutator_identities():
    rng = np.random.default_rng(0)
    b = random_hermitian(6, rng)
    assert np.allclose(anticommutator(np.eye(6), b), 2 * b)
    assert np.allclose(anticommutator(b, b), 2 * b @ b)
    with pytest.raises(DimensionMismatchError):
        anticommutator(np.eye(3), np.eye(4))


def test_anticommutator_hermitian_at_50():
    rng = np.random.default_rng(1)
    a, b = random_hermitian(50, rng), random_hermitian(50, rng)
    m = anticommutator(a, b)
    assert np.max(np.abs(m - m.conj().T)) <= 1e-12
    assert np.allclose(m, a @ b + b @ a)


def test_eigenvalues_simple():
    assert eigenvalues_hermitian(np.diag([3.0, -1.0, 2.0])) == pytest.approx([-1, 2, 3])
    assert eigenvalues_hermitian(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx([-1, 1])
    with pytest.raises(PermWignerError):
        eigenvalues_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 100), seed=st.integers(0, 10**6))
def test_eigen_residuals(n, seed):
    m = random_hermitian(n, np.random.default_rng(seed))
    lam = eigenvalues_hermitian(m)
    assert np.all(np.diff(lam) >= 0)
    assert lam.sum() == pytest.approx(np.trace(m).real, abs=1e-9)
    # residual oracle from an independent decomposition
    w, v = np.linalg.eigh(m)
    norm = np.linalg.norm(m, 2)
    assert np.max(np.linalg.norm(m @ v - v * w, axis=0)) <= 1e-8 * max(norm, 1)
    assert np.max(np.abs(np.sort(w) - lam)) <= 1e-8 * max(norm, 1)


def test_support_edge():
    assert NU_SP_EDGE == pytest.approx(np.sqrt((11 + 5 * np.sqrt(5)) / 2), abs=1e-12)
    assert NU_SP_EDGE == pytest.approx(3.3302, abs=1e-4)
    near = nu_sp_density(NU_SP_EDGE - np.array([1e-2, 1e-4, 1e-6]))
    assert np.all(np.diff(near) < 0) and near[-1] < 1e-2
    assert nu_sp_density(NU_SP_EDGE + 1e-9) == 0
    assert nu_sp_density(5.0) == 0


def test_density_grid_properties():
    x = np.linspace(-NU_SP_EDGE, NU_SP_EDGE, 10_000)
    d = nu_sp_density(x)
    assert np.all(d >= 0)
    assert np.allclose(d, nu_sp_density(-x))


def test_density_normalised_with_second_moment_two():
    mass = integrate.quad(nu_sp_density, -NU_SP_EDGE, NU_SP_EDGE, points=[0], limit=200)[0]
    assert mass == pytest.approx(1, abs=1e-6)
    # the anticommutator of free standard semicirculars has variance 2
    m2 = integrate.quad(lambda x: x * x * nu_sp_density(x), -NU_SP_EDGE, NU_SP_EDGE, points=[0], limit=200)[0]
    assert m2 == pytest.approx(2, abs=1e-6)


def test_density_finite_near_zero():
    vals = nu_sp_density(np.array([1e-8, 1e-6, 1e-4]))
    assert np.all(np.isfinite(vals))
    assert nu_sp_density(0.0) == pytest.approx(vals[0])


def test_cdf_properties():
    x = np.linspace(-NU_SP_EDGE - 0.5, NU_SP_EDGE + 0.5, 301)
    f = nu_sp_cdf(x)
    assert np.all(np.diff(f) >= -1e-15)
    assert nu_sp_cdf(-NU_SP_EDGE) == pytest.approx(0, abs=1e-6)
    assert nu_sp_cdf(NU_SP_EDGE) == pytest.approx(1, abs=1e-6)
    assert nu_sp_cdf(0.0) == 0.5
    assert np.max(np.abs(nu_sp_cdf_fast(x) - f)) < 1e-6


def test_ks_examples():
    rng = np.random.default_rng(0)
    sample = nu_sp_quantile(rng.random(10_000))
    assert ks_distance(sample) <= 0.03
    assert ks_distance(np.array([0.0]), nu_sp_cdf) == pytest.approx(0.5)
    assert ks_distance(sample + 10) == pytest.approx(1, abs=1e-3)
    with pytest.raises(PermWignerError):
        ks_distance(np.array([]))


def test_spectrum_sample_sorted():
    s = SpectrumSample(np.array([2.0, -1.0, 0.5]), 3, {"seed": 1})
    assert list(s.eigenvalues) == [-1.0, 0.5, 2.0]
    with pytest.raises(DimensionMismatchError):
        SpectrumSample(np.zeros(3), 4)


def test_histogram():
    rng = np.random.default_rng(2)
    edges, counts = histogram(rng.random(200_000), 10, (0, 1))
    assert np.sum(counts * np.diff(edges)) == pytest.approx(1)
    assert np.allclose(counts, 1, atol=0.05)
    edges, counts = histogram(np.array([0.3, 0.3]), 4, (0, 1))
    assert np.count_nonzero(counts) == 1
    with pytest.raises(PermWignerError):
        histogram(np.ones(3), 0)
    with pytest.raises(PermWignerError):
        histogram(np.ones(3), 5, (1.0, 1.0))


def test_two_column_output(tmp_path):
    path = tmp_path / "h.csv"
    write_two_column(path, [0.0, 1.0], [0.25, 0.75])
    lines = path.read_text().splitlines()
    assert lines[0] == "x,value" and lines[2] == "1.0,0.75"
