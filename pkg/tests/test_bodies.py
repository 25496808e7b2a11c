import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starslice.bodies import (
    DimensionError, Ellipsoid, EuclideanBall, LinearImage, LpBall, RadialGrid, SectionBody,
    Subspace, canonical_sign, default_grid_nodes, icosphere, minkowski, radial, subspace_restrict,
)
from starslice.constants import ball_volume

P_VALUES = [0.5, 1.0, 1.5, 2.0, 4.0, math.inf]

vectors3 = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


@settings(max_examples=60, deadline=None)
@given(vectors3, st.floats(0.01, 100), st.sampled_from(P_VALUES))
def test_gauge_is_positively_homogeneous_and_even(x, t, p):
    K = LpBall(3, p)
    x = np.array(x)
    g = minkowski(K, x)
    assert minkowski(K, t * x) == pytest.approx(t * g, rel=1e-12)
    assert minkowski(K, -x) == pytest.approx(g, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(vectors3, st.sampled_from(P_VALUES))
def test_radial_is_reciprocal_gauge(x, p):
    K = LpBall(3, p)
    d = np.array(x) / np.linalg.norm(x)
    assert radial(K, d) * minkowski(K, d) == pytest.approx(1.0, rel=1e-12)


def test_radial_rejects_non_unit_direction():
    with pytest.raises(ValueError):
        radial(EuclideanBall(3), np.array([1.0, 1.0, 0.0]))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        minkowski(EuclideanBall(3), np.ones(4))


@pytest.mark.parametrize("p", P_VALUES)
@pytest.mark.parametrize("n", [2, 3, 5])
def test_lp_closed_form_volume(n, p):
    v = LpBall(n, p).closed_form_volume()
    if p == 2.0:
        assert v == pytest.approx(ball_volume(n), rel=1e-13)
    if p == math.inf:
        assert v == pytest.approx(2.0 ** n, rel=1e-13)
    if p == 1.0:
        assert v == pytest.approx(2.0 ** n / math.factorial(n), rel=1e-13)


def test_scaled_lp_volume_scales_as_power_n():
    assert LpBall(4, 1.5, 2.0).closed_form_volume() == pytest.approx(16 * LpBall(4, 1.5).closed_form_volume())


def test_outer_radius_contains_body():
    D = np.random.default_rng(0).standard_normal((2000, 4))
    D /= np.linalg.norm(D, axis=1)[:, None]
    for p in P_VALUES:
        K = LpBall(4, p)
        assert K.radial_many(D).max() <= K.outer_radius() * (1 + 1e-12)


def test_ellipsoid_axes_and_volume():
    E = Ellipsoid.from_axes([1.0, 2.0, 3.0])
    assert radial(E, np.array([0.0, 0.0, 1.0])) == pytest.approx(3.0)
    assert E.closed_form_volume() == pytest.approx(6.0 * ball_volume(3))


def test_linear_image_gauge_and_volume():
    T = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]])
    K = LinearImage(LpBall(3, 1.0), T)
    x = np.array([0.3, -0.7, 0.2])
    assert minkowski(K, T @ x) == pytest.approx(np.abs(x).sum(), rel=1e-13)
    assert K.closed_form_volume() == pytest.approx(abs(np.linalg.det(T)) * 8 / 6)


def test_linear_image_of_ball_is_ellipsoid_image():
    T = np.diag([1.0, 2.0, 3.0])
    a, b = LinearImage(EuclideanBall(3), T), Ellipsoid.from_axes([1, 2, 3])
    D = np.random.default_rng(1).standard_normal((100, 3))
    np.testing.assert_allclose(a.gauge(D), b.gauge(D), rtol=1e-12)


def test_singular_linear_map_rejected():
    with pytest.raises(ValueError):
        LinearImage(EuclideanBall(2), np.array([[1.0, 1.0], [1.0, 1.0]]))


# --- subspaces


def test_subspace_requires_orthonormal_columns():
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("k", [0, 3])
def test_subspace_dimension_bounds(k):
    with pytest.raises(ValueError):
        Subspace(np.eye(3)[:, :k])


def test_hyperplane_is_orthogonal_to_normal():
    v = np.array([1.0, 2.0, -2.0])
    H = Subspace.hyperplane(v)
    assert H.dim == 2 and H.codim == 1
    np.testing.assert_allclose(v @ H.basis, 0.0, atol=1e-14)


def test_projector_is_idempotent():
    H = Subspace.span([[1, 1, 0, 0], [0, 0, 1, 1]])
    P = H.projector()
    np.testing.assert_allclose(P @ P, P, atol=1e-14)


# --- restriction to subspaces


def test_restrict_ball_gives_lower_dimensional_ball():
    S = subspace_restrict(EuclideanBall(4, 2.0), Subspace.hyperplane(np.ones(4)))
    assert isinstance(S, EuclideanBall) and S.dim == 3 and S.radius == 2.0


def test_restrict_lp_to_coordinate_subspace():
    H = Subspace(np.eye(4)[:, [0, 2]])
    S = subspace_restrict(LpBall(4, 1.5), H)
    assert isinstance(S, LpBall) and S.dim == 2 and S.p == 1.5


def test_restrict_ellipsoid_matches_generic_section():
    E = Ellipsoid.from_axes([1.0, 2.0, 3.0])
    H = Subspace.hyperplane(np.array([1.0, 1.0, 1.0]))
    exact = subspace_restrict(E, H)
    generic = SectionBody(E, H.basis)
    U = np.random.default_rng(2).standard_normal((50, 2))
    np.testing.assert_allclose(exact.gauge(U), generic.gauge(U), rtol=1e-12)


def test_section_of_l1_through_diagonal():
    S = subspace_restrict(LpBall(3, 1.0), Subspace.hyperplane(np.ones(3)))
    # a regular hexagon; (1, -1, 0)/2 is one of its vertices
    v = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
    u = S.basis.T @ v
    assert isinstance(S, SectionBody)
    assert 1.0 / minkowski(S, u) == pytest.approx(1 / math.sqrt(2), rel=1e-12)


# --- tabulated bodies


def test_icosphere_vertex_count():
    V, F = icosphere(16)
    assert V.shape == (2562, 3)
    np.testing.assert_allclose(np.linalg.norm(V, axis=1), 1.0, atol=1e-14)


def test_default_grid_sizes():
    assert default_grid_nodes(2, 0).shape == (1024, 2)
    assert default_grid_nodes(3, 0).shape == (1281, 3)
    assert default_grid_nodes(4, 0).shape[1] == 4


@pytest.mark.parametrize("n", [2, 3, 4])
def test_radial_grid_exact_on_nodes_and_even(n):
    K = LpBall(n, 1.5)
    G = RadialGrid.tabulate(K)
    nodes = G.nodes
    np.testing.assert_allclose(G.radial_many(nodes), K.radial_many(nodes), rtol=1e-12)
    np.testing.assert_array_equal(G.radial_many(-nodes), G.radial_many(nodes))


@pytest.mark.parametrize("n", [2, 3])
def test_radial_grid_interpolates_smooth_body(n):
    K = Ellipsoid.from_axes([1.0, 1.3, 1.6][:n])
    G = RadialGrid.tabulate(K)
    D = np.random.default_rng(3).standard_normal((500, n))
    D /= np.linalg.norm(D, axis=1)[:, None]
    np.testing.assert_allclose(G.radial_many(D), K.radial_many(D), rtol=2e-3)


def test_radial_grid_rejects_nonpositive_values():
    with pytest.raises(ValueError):
        RadialGrid(np.eye(3), np.array([1.0, 0.0, 1.0]))


def test_canonical_sign_is_idempotent_on_pairs():
    D = np.random.default_rng(4).standard_normal((20, 3))
    np.testing.assert_array_equal(canonical_sign(D), canonical_sign(-D))


def test_to_spec_roundtrip_structure():
    K = LinearImage(LpBall(3, math.inf), 2 * np.eye(3))
    spec = K.to_spec()
    assert spec["family"] == "linear_image" and spec["inner"]["p"] == "inf"
