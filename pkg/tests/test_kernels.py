import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starslice import kernels

needs_numba = pytest.mark.skipif(kernels.numba_kernels is None, reason="numba not installed")


def _points(seed, N=500, n=4):
    return np.random.default_rng(seed).standard_normal((N, n))


@needs_numba
@pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 2.0, 4.0, math.inf])
def test_lp_gauge_backends_agree(p):
    X = _points(1)
    a = kernels.numpy_kernels.lp_gauge(X, p)
    b = kernels.numba_kernels.lp_gauge(X, p)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_lp_gauge_against_numpy_norm():
    X = _points(2)
    for p in (1.0, 2.0, 3.0, math.inf):
        np.testing.assert_allclose(kernels.lp_gauge(X, p), np.linalg.norm(X, ord=p, axis=1), rtol=1e-13)


def test_lp_gauge_handles_zero_rows():
    X = np.zeros((3, 4))
    assert np.all(kernels.lp_gauge(X, 1.5) == 0.0)


@needs_numba
def test_quadform_backends_agree():
    X = _points(3)
    M = np.random.default_rng(4).standard_normal((4, 4))
    A = M @ M.T + 4 * np.eye(4)
    np.testing.assert_allclose(kernels.numpy_kernels.quadform_gauge(X, A),
                               kernels.numba_kernels.quadform_gauge(X, A), rtol=1e-13)


def _radial_args(seed=5, N=300):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.1, 3.0, N)
    a = rng.uniform(0.5, 1.5, (N, 2))
    kinds = np.array([kernels.KIND_GAUSSIAN, kernels.KIND_GENGAUSS])
    params = np.array([[0.3, 1.2], [1.5, 0.8]])
    t, w = np.polynomial.legendre.leggauss(64)
    return rho, a, kinds, params, t, w


@needs_numba
@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_radial_moments_backends_agree(k):
    args = _radial_args()
    np.testing.assert_allclose(kernels.numpy_kernels.radial_moments(*args, k),
                               kernels.numba_kernels.radial_moments(*args, k), rtol=1e-12)


def test_radial_moment_of_constant_is_power():
    rho = np.array([0.5, 1.0, 2.0])
    t, w = np.polynomial.legendre.leggauss(8)
    out = kernels.radial_moments(rho, np.ones((3, 1)), np.array([0]), np.array([[2.0, 0.0]]), t, w, 3)
    np.testing.assert_allclose(out, 2.0 * rho ** 3 / 3, rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.3, 3.0), st.integers(1, 6))
def test_gaussian_radial_moment_matches_incomplete_gamma(rho, sigma, k):
    from scipy import special

    t, w = np.polynomial.legendre.leggauss(64)
    got = kernels.radial_moments(np.array([rho]), np.ones((1, 1)), np.array([1]),
                                 np.array([[1.0, sigma]]), t, w, k)[0]
    s = math.sqrt(2) * sigma
    want = s ** k / 2 * math.gamma(k / 2) * special.gammainc(k / 2, (rho / s) ** 2)
    assert got == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("flag,backend", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, backend):
    if backend == "numba" and kernels.numba_kernels is None:
        pytest.skip("numba not installed")
    env = dict(os.environ, STARSLICE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from starslice import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == backend
