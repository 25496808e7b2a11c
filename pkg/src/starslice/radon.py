"""Spherical Radon transform, intersection bodies and Lévy representations."""
import numpy as np

from .bodies import DimensionError, RadialGrid, Subspace, canonical_sign, default_grid_nodes
from .constants import sphere_area
from .quadrature import Estimate, QuadratureSpec, _design, section_volume

EVEN_RTOL = 1e-12


class SphericalFunction:
    """A continuous even function on S^(n-1).

    ``evaluator`` maps an ``(N, n)`` array of unit vectors to ``(N,)`` values.
    Evenness is checked on a probe set at construction.
    """

    def __init__(self, n, evaluator, label="custom", check=True):
        if n < 2:
            raise DimensionError("spherical functions need n >= 2")
        self.dim = int(n)
        self._fn = evaluator
        self.label = label
        if check:
            rng = np.random.default_rng(12345)
            P = rng.standard_normal((64, self.dim))
            P /= np.linalg.norm(P, axis=1)[:, None]
            a, b = self(P), self(-P)
            if not np.allclose(a, b, rtol=EVEN_RTOL, atol=1e-14):
                raise ValueError(f"spherical function {label!r} is not even")

    def __call__(self, D):
        D = np.asarray(D, dtype=np.float64)
        if D.ndim != 2 or D.shape[1] != self.dim:
            raise DimensionError(f"expected directions in R^{self.dim}")
        return np.asarray(self._fn(D), dtype=np.float64)

    def __add__(self, other):
        if other.dim != self.dim:
            raise DimensionError("dimension mismatch")
        return SphericalFunction(self.dim, lambda D: self(D) + other(D), f"({self.label} + {other.label})", check=False)

    def __mul__(self, c):
        c = float(c)
        return SphericalFunction(self.dim, lambda D: c * self(D), f"{c}*{self.label}", check=False)

    __rmul__ = __mul__

    @classmethod
    def constant(cls, n, c=1.0):
        return cls(n, lambda D: np.full(len(D), float(c)), f"const({c})", check=False)

    @classmethod
    def monomial(cls, n, coord, power=2):
        """``x_coord ** power`` for an even ``power``."""
        if power % 2:
            raise ValueError("only even powers give even functions")
        return cls(n, lambda D: D[:, coord] ** power, f"x{coord}^{power}", check=False)

    @classmethod
    def abs_inner(cls, direction, p):
        """``|<x, v>|^p``."""
        v = np.asarray(direction, dtype=np.float64)
        return cls(len(v), lambda D: np.abs(D @ v) ** p, f"|<x,v>|^{p}", check=False)

    @classmethod
    def radial_power(cls, body, q):
        """``rho_K(x)^q``."""
        return cls(body.dim, lambda D: body.radial_many(D) ** q, f"rho^{q}", check=False)


def radon_transform(g, H, quad=QuadratureSpec()):
    """``R_{n-m} g(H) = int_{S^{n-1} ∩ H} g``.

    Integration nodes are ``H.basis @ u`` with ``u`` on S^(n-m-1); for a line
    the two endpoints ``±theta_H`` are used exactly.
    """
    if H.ambient_dim != g.dim:
        raise DimensionError(f"subspace in R^{H.ambient_dim} for a function on S^{g.dim - 1}")
    B = np.array(H.basis)
    k = B.shape[1]
    design = _design(k, quad)
    vals = g(design.U @ B.T)
    mean, se = design.mean_se(vals)
    S = sphere_area(k)
    return Estimate(S * mean, S * se, len(design.U))


def intersection_body_of(L, quad=QuadratureSpec(), nodes=None, grid_seed=0):
    """Radial grid of the intersection body: ``rho_K(xi) = |L ∩ xi^perp|``.

    Values are computed on one node of each antipodal pair; per-node
    standard errors are kept on the returned body as ``std_errors``.
    """
    n = L.dim
    if n < 2:
        raise DimensionError("intersection bodies need n >= 2")
    if nodes is None:
        nodes = default_grid_nodes(n, grid_seed)
    nodes = canonical_sign(np.asarray(nodes, dtype=np.float64))
    ests = [section_volume(L, Subspace.hyperplane(xi), quad) for xi in nodes]
    values = np.array([e.value for e in ests])
    se = np.array([e.std_error for e in ests])
    return RadialGrid(nodes, values, origin="intersection_body", std_errors=se)


class AtomicSphericalMeasure:
    """Finite atomic measure on the sphere: unit atoms with non-negative weights."""

    def __init__(self, directions, weights):
        D = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        w = np.asarray(weights, dtype=np.float64).ravel()
        if D.size == 0 or len(w) == 0:
            raise ValueError("an atomic measure needs at least one atom")
        if len(D) != len(w):
            raise ValueError("one weight per atom required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if np.any(np.abs(np.linalg.norm(D, axis=1) - 1.0) > 1e-9):
            raise ValueError("atoms must be unit vectors")
        self.directions = D
        self.weights = w
        self.dim = D.shape[1]

    @property
    def degenerate(self):
        """True when the weighted atoms span a proper subspace (seminorm)."""
        live = self.directions[self.weights > 0]
        return len(live) == 0 or np.linalg.matrix_rank(live) < self.dim


def levy_norms(mu, p, X):
    """Vectorised ``(sum_i w_i |<x, xi_i>|^p)^(1/p)`` over the rows of ``X``."""
    p = float(p)
    if not p > 0:
        raise ValueError("p must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != mu.dim:
        raise DimensionError(f"expected vectors in R^{mu.dim}")
    s = (np.abs(X @ mu.directions.T) ** p) @ mu.weights
    return s ** (1.0 / p)


def levy_norm(mu, p, x):
    """``(sum_i w_i |<x, xi_i>|^p)^(1/p)``; a seminorm when ``mu.degenerate``."""
    return float(levy_norms(mu, p, np.asarray(x, dtype=np.float64)[None, :])[0])


def levy_body(mu, p, nodes=None, grid_seed=0):
    """Unit ball of the Lévy norm, tabulated on a symmetric grid.

    Degenerate measures give unbounded "balls" and are rejected.
    """
    if mu.degenerate:
        raise ValueError("atoms do not span R^n: the Lévy functional is only a seminorm")
    if nodes is None:
        nodes = default_grid_nodes(mu.dim, grid_seed)
    nodes = canonical_sign(np.asarray(nodes, dtype=np.float64))
    return RadialGrid(nodes, 1.0 / levy_norms(mu, p, nodes), origin=f"levy:{float(p)!r}")


def sphere_measure(k):
    """``|S^(k-1)|``; re-exported for callers checking constant transforms."""
    return sphere_area(k)


__all__ = [
    "SphericalFunction", "radon_transform", "intersection_body_of",
    "AtomicSphericalMeasure", "levy_norm", "levy_norms", "levy_body", "sphere_measure",
]
