import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stochns.spectral import (Spectrum, basis_vector, build_spectrum, embed, fractional_apply,
                              fractional_norm, hilbert_schmidt_tail, interpolation_check,
                              project, semigroup_apply, smoothing_bound, smoothing_bound_check)


def test_synthetic_eigenvalues_are_linear():
    s = build_spectrum("synthetic", 5, c=2.0)
    assert np.array_equal(s.eigenvalues, [2, 4, 6, 8, 10])


def test_torus_eigenvalues_sorted_squared_wavenumbers():
    s = build_spectrum("torus", 8)
    assert np.array_equal(s.eigenvalues, [1, 1, 1, 1, 2, 2, 2, 2])
    assert np.all(np.diff(build_spectrum("torus", 200).eigenvalues) >= 0)


def test_torus_levels_are_nested():
    big = build_spectrum("torus", 64)
    assert np.array_equal(big.truncate(20).eigenvalues, build_spectrum("torus", 20).eigenvalues)


@pytest.mark.parametrize("bad", [[0.0, 1.0], [2.0, 1.0], []])
def test_spectrum_rejects_bad_eigenvalues(bad):
    with pytest.raises(ValueError):
        Spectrum(np.array(bad))


def test_build_spectrum_rejects_bad_input():
    with pytest.raises(ValueError):
        build_spectrum("torus", 0)
    with pytest.raises(ValueError):
        build_spectrum("sphere", 4)


def test_fractional_norm_of_basis_vector():
    s = build_spectrum("synthetic", 4)
    assert fractional_norm(basis_vector(s, 3), s, 0.5) == pytest.approx(2.0)


def test_fractional_apply_shape_check():
    s = build_spectrum("synthetic", 4)
    with pytest.raises(ValueError):
        fractional_apply(np.ones(5), s, 1.0)


def test_semigroup_identity_at_zero_and_rejects_negative():
    s = build_spectrum("synthetic", 4)
    x = np.arange(4.0)
    assert np.array_equal(semigroup_apply(x, s, 0.0), x)
    with pytest.raises(ValueError):
        semigroup_apply(x, s, -1.0)


def test_smoothing_bound_attained_at_optimal_eigenvalue():
    # lambda^a e^{-t lambda} peaks at lambda = a/t
    s = Spectrum(np.array([0.5, 1.0, 2.0]))
    r = smoothing_bound_check(s, 1.0, 1.0)
    assert r["lhs"] == pytest.approx(r["rhs"], rel=1e-15)
    assert r["ok"]


def test_smoothing_bound_rejects_nonpositive():
    s = build_spectrum("synthetic", 4)
    with pytest.raises(ValueError):
        smoothing_bound_check(s, 0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(0.01, 3.0), t=st.floats(1e-4, 50.0), backend=st.sampled_from(["torus", "synthetic"]))
def test_smoothing_bound_property(alpha, t, backend):
    s = build_spectrum(backend, 64)
    assert smoothing_bound_check(s, alpha, t)["ok"]


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2 ** 31), p=st.floats(0, 1), dq=st.floats(0.01, 2), lam=st.floats(0.01, 0.99))
def test_interpolation_property(seed, p, dq, lam):
    s = build_spectrum("torus", 32)
    x = np.random.default_rng(seed).standard_normal(32)
    assert interpolation_check(x, s, p, p + dq, lam)["ok"]


def test_interpolation_single_mode_equality():
    s = build_spectrum("synthetic", 10)
    r = interpolation_check(basis_vector(s, 6), s, 0.2, 1.1, 0.4)
    assert r["lhs"] == pytest.approx(r["rhs"], rel=1e-12)
    assert r["r"] == pytest.approx(0.4 * 0.2 + 0.6 * 1.1)


@pytest.mark.parametrize("args", [(0.5, 0.5, 0.5), (-0.1, 1, 0.5), (0, 1, 1.0), (0, 1, 0.0)])
def test_interpolation_rejects_bad_exponents(args):
    s = build_spectrum("synthetic", 4)
    with pytest.raises(ValueError):
        interpolation_check(np.ones(4), s, *args)


def test_hilbert_schmidt_tail_and_projection_helpers():
    s = build_spectrum("synthetic", 3)
    assert hilbert_schmidt_tail(s, 0.5) == pytest.approx(1 + 1 / 2 + 1 / 3)
    x = np.arange(5.0)
    assert np.array_equal(project(x, 2), [0, 1])
    assert np.array_equal(embed([1.0, 2.0], 4), [1, 2, 0, 0])


def test_smoothing_bound_formula():
    assert smoothing_bound(1.0, 1.0) == pytest.approx(np.exp(-1))
