import math

import numpy as np
import pytest

from starslice.bodies import EuclideanBall, LpBall, Subspace
from starslice.constants import IntersectionBody, SubspaceLq, classify
from starslice.quadrature import QuadratureSpec, haar_subspace
from starslice.radon import (
    AtomicSphericalMeasure, SphericalFunction, intersection_body_of, levy_body, levy_norm,
    radon_transform, sphere_measure,
)

Q = QuadratureSpec()


def test_constant_transform_is_sphere_area():
    for n, m in [(3, 1), (4, 1), (4, 2), (5, 3)]:
        H = haar_subspace(n, m, 1, seed=n + m)[0]
        est = radon_transform(SphericalFunction.constant(n), H, Q)
        target = sphere_measure(n - m)
        assert abs(est.value - target) <= 4 * est.std_error + 1e-12


def test_monomial_on_coordinate_plane():
    # int over the unit circle in the (x0, x1)-plane of x0^2 is pi
    H = Subspace(np.eye(3)[:, :2])
    est = radon_transform(SphericalFunction.monomial(3, 0, 2), H, Q)
    assert est.value == pytest.approx(math.pi, rel=1e-12)


def test_line_transform_is_two_point_sum():
    g = SphericalFunction.abs_inner([1.0, 0.0, 0.0], 2.0)
    d = np.array([0.6, 0.8, 0.0])
    est = radon_transform(g, Subspace(d[:, None]), Q)
    assert est.value == pytest.approx(2 * 0.36, rel=1e-14)
    assert est.std_error == 0.0


def test_odd_function_rejected():
    with pytest.raises(ValueError, match="not even"):
        SphericalFunction(3, lambda D: D[:, 0])


def test_odd_power_monomial_rejected():
    with pytest.raises(ValueError):
        SphericalFunction.monomial(3, 0, 3)


def test_linearity_and_positivity_hold_samplewise():
    rng = np.random.default_rng(7)
    for H in haar_subspace(4, 1, 10, seed=1):
        a, b = rng.uniform(0.1, 2.0, 2)
        f = SphericalFunction.abs_inner(rng.standard_normal(4), 1.0)
        g = SphericalFunction.monomial(4, 2, 4)
        lhs = radon_transform(a * f + b * g, H, Q).value
        rhs = a * radon_transform(f, H, Q).value + b * radon_transform(g, H, Q).value
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert radon_transform(f, H, Q).value >= 0


def test_intersection_body_of_ball_is_constant():
    G = intersection_body_of(EuclideanBall(3), Q)
    assert np.all(np.abs(G.values - math.pi) <= 4 * G.std_errors + 1e-12)
    assert IntersectionBody() in classify(G)


def test_intersection_body_of_cross_polytope_bounds():
    G = intersection_body_of(LpBall(3, 1.0), Q, nodes=np.eye(3))
    np.testing.assert_allclose(G.values, 2.0, rtol=1e-12)


def test_levy_norm_recovers_lp_norm():
    mu = AtomicSphericalMeasure(np.eye(3), [1.0, 1.0, 1.0])
    x = np.array([0.5, -1.0, 2.0])
    assert levy_norm(mu, 1.5, x) == pytest.approx(np.linalg.norm(x, 1.5), rel=1e-13)


def test_degenerate_measure_gives_seminorm_and_no_body():
    mu = AtomicSphericalMeasure(np.eye(3)[:2], [1.0, 1.0])
    assert mu.degenerate
    assert levy_norm(mu, 1.0, np.array([0.0, 0.0, 1.0])) == 0.0
    with pytest.raises(ValueError, match="seminorm"):
        levy_body(mu, 1.0)


def test_levy_body_classification():
    mu = AtomicSphericalMeasure(np.eye(3), [1.0, 2.0, 0.5])
    K = levy_body(mu, 1.0)
    tags = classify(K)
    assert SubspaceLq(1.0) in tags and IntersectionBody() in tags


@pytest.mark.parametrize("bad", [[-1.0, 1.0], [1.0]])
def test_atomic_measure_validation(bad):
    with pytest.raises(ValueError):
        AtomicSphericalMeasure(np.eye(2), bad)
