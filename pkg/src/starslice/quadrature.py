"""Integration over spheres, bodies and central sections.

Volumes and measures use the polar formula

    mu(K) = int_{S^{k-1}} int_0^{rho_K(u)} r^{k-1} f(r u) dr du,

with a fixed Gauss-Legendre rule in ``r`` and, over the sphere, an exact
two-point rule (k = 1), a deterministic angular grid (k = 2) or Monte Carlo
(k >= 3).  The rejection oracle at the bottom shares none of that code.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import kernels
from ._parallel import (
    CHUNK, STREAM_REFINE, STREAM_REJECTION, STREAM_SPHERE, STREAM_SUBSPACE,
    chunk_sizes, generator, pmap,
)
from .bodies import DimensionError, Subspace, subspace_restrict
from .constants import sphere_area

MONTE_CARLO = "monte-carlo"
STRATIFIED = "stratified-antithetic"
ESTIMATORS = (MONTE_CARLO, STRATIFIED)


@dataclass(frozen=True)
class QuadratureSpec:
    sphere_samples: int = 20_000
    radial_nodes: int = 64
    seed: int = 0
    estimator: str = MONTE_CARLO
    subspace_samples: int = 200
    refine_steps: int = 50

    def __post_init__(self):
        for name in ("sphere_samples", "radial_nodes", "subspace_samples"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if int(self.refine_steps) < 0:
            raise ValueError("refine_steps must be >= 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return QuadratureSpec(**d)

    def to_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float = 0.0
    samples_used: int = 0

    @property
    def exact(self):
        return self.std_error == 0.0

    def scaled(self, c):
        return Estimate(c * self.value, abs(c) * self.std_error, self.samples_used)

    def power(self, a):
        v = self.value ** a
        se = abs(a) * abs(self.value) ** (a - 1) * self.std_error if self.std_error else 0.0
        return Estimate(v, se, self.samples_used)

    def __add__(self, other):
        if not isinstance(other, Estimate):
            return Estimate(self.value + other, self.std_error, self.samples_used)
        return Estimate(self.value + other.value, math.hypot(self.std_error, other.std_error),
                        self.samples_used + other.samples_used)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def __mul__(self, other):
        if not isinstance(other, Estimate):
            return self.scaled(other)
        se = math.hypot(other.value * self.std_error, self.value * other.std_error)
        return Estimate(self.value * other.value, se, self.samples_used + other.samples_used)

    __rmul__ = __mul__

    def to_dict(self):
        return {"value": self.value, "std_error": self.std_error, "samples_used": self.samples_used}


# --------------------------------------------------------------------------
# densities


class DensitySpec:
    """Even, continuous, non-negative density; built-in families only."""

    def evaluate(self, X):
        """Density at ambient points ``X`` of shape ``(N, n)``."""
        raise NotImplementedError

    def factors(self, n):
        """``[(kind, (p0, p1), scalar_fn)]`` as consumed by :func:`kernels.radial_moments`."""
        raise NotImplementedError

    @property
    def constant_value(self):
        return None

    def __mul__(self, other):
        return Product(self, other)


@dataclass(frozen=True)
class Constant(DensitySpec):
    c: float = 1.0

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ValueError("constant density must be finite and >= 0")

    def evaluate(self, X):
        return np.full(len(X), float(self.c))

    def factors(self, n):
        return [(kernels.KIND_CONSTANT, (float(self.c), 0.0), None)]

    @property
    def constant_value(self):
        return float(self.c)

    def to_spec(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class Gaussian(DensitySpec):
    """Centred normal density ``N(0, sigma^2 I_n)`` of the ambient space."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def _coef(self, n):
        return (2.0 * math.pi * self.sigma ** 2) ** (-0.5 * n)

    def evaluate(self, X):
        X = np.asarray(X, dtype=np.float64)
        r2 = np.einsum("ij,ij->i", X, X)
        return self._coef(X.shape[1]) * np.exp(-0.5 * r2 / self.sigma ** 2)

    def factors(self, n):
        return [(kernels.KIND_GAUSSIAN, (self._coef(n), float(self.sigma)),
                 lambda T: np.sqrt(np.einsum("ij,ij->i", T, T)))]

    def to_spec(self):
        return {"kind": "gaussian", "sigma": self.sigma}


@dataclass(frozen=True)
class GeneralizedGaussian(DensitySpec):
    """``exp(-(||x||_q / s)^q)`` (unnormalised)."""

    q: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        if not (self.q > 0 and self.s > 0):
            raise ValueError("q and s must be positive")

    def evaluate(self, X):
        X = np.asarray(X, dtype=np.float64)
        return np.exp(-((kernels.lp_gauge(X, self.q) / self.s) ** self.q))

    def factors(self, n):
        q = float(self.q)
        return [(kernels.KIND_GENGAUSS, (q, float(self.s)), lambda T: kernels.lp_gauge(T, q))]

    def to_spec(self):
        return {"kind": "generalized_gaussian", "q": self.q, "s": self.s}


@dataclass(frozen=True)
class Product(DensitySpec):
    first: DensitySpec
    second: DensitySpec

    def evaluate(self, X):
        return self.first.evaluate(X) * self.second.evaluate(X)

    def factors(self, n):
        return self.first.factors(n) + self.second.factors(n)

    @property
    def constant_value(self):
        a, b = self.first.constant_value, self.second.constant_value
        return None if a is None or b is None else a * b

    def to_spec(self):
        return {"kind": "product", "factors": [self.first.to_spec(), self.second.to_spec()]}


# --------------------------------------------------------------------------
# sampling


def _normalize(G):
    return G / np.linalg.norm(G, axis=1)[:, None]


def _frame_groups(rng, groups, n):
    """``groups`` random orthonormal frames, each expanded to its 2n signed columns."""
    Q = _haar_orthonormal(rng, groups, n, n)
    cols = Q.transpose(0, 2, 1)  # (groups, n, n): rows are columns of Q
    return np.concatenate([cols, -cols], axis=1).reshape(-1, n)


def sphere_sample(n, count, seed=0, estimator=MONTE_CARLO, stream=STREAM_SPHERE):
    """Uniform directions on S^(n-1) from normalised Gaussian vectors.

    With ``estimator="stratified-antithetic"`` the points come in groups of
    ``2n`` (the signed columns of a Haar-random orthogonal matrix) and
    ``count`` is rounded up to a multiple of ``2n``.
    """
    if n < 2:
        raise DimensionError("sphere sampling needs n >= 2")
    if count < 1:
        raise ValueError("count must be >= 1")
    if estimator == STRATIFIED:
        gsize = 2 * n
        groups = -(-int(count) // gsize)
        per = max(CHUNK // gsize, 1)
        sizes = chunk_sizes(groups, per)
        parts = pmap(lambda ic: _frame_groups(generator(seed, stream, ic[0]), ic[1], n), enumerate(sizes))
        return np.vstack(parts)
    sizes = chunk_sizes(count)
    parts = pmap(lambda ic: _normalize(generator(seed, stream, ic[0]).standard_normal((ic[1], n))), enumerate(sizes))
    return np.vstack(parts)


GRID_OFFSET = (math.sqrt(5.0) - 1.0) / 2.0


class _Design:
    """A set of sphere nodes plus the rule that turns node values into (mean, se)."""

    def __init__(self, U, mode, gsize=1):
        self.U, self.mode, self.gsize = U, mode, gsize

    def mean_se(self, vals):
        if self.mode == "exact":
            return float(np.mean(vals)), 0.0
        if self.mode == "grid":
            # every other node is itself a midpoint rule with twice the step;
            # the gap between the two is a conservative error bound for the finer one
            mean = float(np.mean(vals))
            return mean, abs(mean - float(np.mean(vals[::2])))
        if self.mode == "groups":
            g = vals.reshape(-1, self.gsize).mean(axis=1)
        else:
            g = vals
        if len(g) < 2:
            return float(np.mean(g)), float("inf")
        return float(np.mean(g)), float(np.std(g, ddof=1) / math.sqrt(len(g)))


def _design(k, quad, stream=STREAM_SPHERE):
    if k == 1:
        return _Design(np.array([[1.0], [-1.0]]), "exact")
    if k == 2:
        M = int(quad.sphere_samples) + int(quad.sphere_samples) % 2
        # an irrational offset keeps the two half-grids from mirroring each
        # other under the reflection symmetries every centred body has
        t = (np.arange(M) + GRID_OFFSET) * (2.0 * math.pi / M)
        return _Design(np.column_stack([np.cos(t), np.sin(t)]), "grid")
    U = sphere_sample(k, quad.sphere_samples, quad.seed, quad.estimator, stream)
    if quad.estimator == STRATIFIED:
        return _Design(U, "groups", 2 * k)
    return _Design(U, "mc")


def _chunked(fn, U):
    if len(U) <= CHUNK:
        return fn(U)
    parts = pmap(fn, [U[i:i + CHUNK] for i in range(0, len(U), CHUNK)])
    return np.concatenate(parts)


def _haar_orthonormal(rng, count, n, k):
    G = rng.standard_normal((count, n, k))
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diagonal(R, axis1=1, axis2=2))
    d = np.where(d == 0, 1.0, d)
    return Q * d[:, None, :]


def haar_bases(n, m, count, seed=0, stream=STREAM_SUBSPACE):
    """``(count, n, n-m)`` array of orthonormal bases of Haar-random subspaces."""
    if n < 2 or not 1 <= m <= n - 1:
        raise ValueError(f"codimension out of range: need 1 <= m <= n-1, got n={n}, m={m}")
    if count < 1:
        raise ValueError("count must be >= 1")
    k = n - m
    per = max(CHUNK // (n * k), 1)
    sizes = chunk_sizes(count, per)
    parts = pmap(lambda ic: _haar_orthonormal(generator(seed, stream, ic[0]), ic[1], n, k), enumerate(sizes))
    return np.concatenate(parts)


def haar_subspace(n, m, count, seed=0):
    """Haar-distributed ``(n-m)``-dimensional subspaces (QR of Gaussian matrices)."""
    return [Subspace(B) for B in haar_bases(n, m, count, seed)]


# --------------------------------------------------------------------------
# polar integrators


def _gl(nodes):
    return np.polynomial.legendre.leggauss(int(nodes))


def _polar_volume(body, design):
    k = body.dim
    vals = _chunked(lambda U: body.gauge(U) ** (-float(k)), design.U)
    mean, se = design.mean_se(vals)
    c = sphere_area(k) / k
    return Estimate(c * mean, c * se, len(design.U))


def volume(body, quad=QuadratureSpec(), closed_form=True):
    """``|K|``; exact Gamma-function path when the family has one.

    ``closed_form=False`` forces the polar estimator (used to cross-check).
    """
    if closed_form:
        v = body.closed_form_volume()
        if v is not None:
            return Estimate(float(v), 0.0, 0)
    return _polar_volume(body, _design(body.dim, quad))


def section_volume(body, H, quad=QuadratureSpec()):
    """``|K ∩ H|`` in the dimension of ``H``."""
    if H.ambient_dim != body.dim:
        raise DimensionError(f"subspace in R^{H.ambient_dim} for a body in R^{body.dim}")
    return volume(subspace_restrict(body, H), quad)


def _analytic_radial(rho, a, kinds, params, k):
    """Closed-form radial integral for a single Gaussian-type factor.

    ``int_0^rho r^(k-1) exp(-(r a / s)^q) dr = (s/a)^k / q * gamma(k/q, (rho a / s)^q)``
    with the lower incomplete gamma function.  Returns ``None`` for
    products, which go through Gauss-Legendre.
    """
    if len(kinds) != 1 or kinds[0] == kernels.KIND_CONSTANT:
        return None
    if kinds[0] == kernels.KIND_GAUSSIAN:
        coef, sigma = params[0]
        s = math.sqrt(2.0) * sigma / a
        q = 2.0
    else:
        q, s0 = params[0]
        coef, s = 1.0, s0 / a
    h = k / q
    return coef * s ** k / q * math.gamma(h) * special.gammainc(h, (rho / s) ** q)


def _radial_measure(body_gauge, embed, f, n, k, design, quad):
    t_nodes, w_nodes = _gl(quad.radial_nodes)
    facs = f.factors(n)
    kinds = np.array([fc[0] for fc in facs], dtype=np.int64)
    params = np.array([fc[1] for fc in facs], dtype=np.float64)

    def chunk(U):
        T = embed(U)
        rho = 1.0 / body_gauge(T)
        a = np.ones((len(U), len(facs)))
        for j, fc in enumerate(facs):
            if fc[2] is not None:
                a[:, j] = fc[2](T)
        exact = _analytic_radial(rho, a[:, 0], kinds, params, k)
        if exact is not None:
            return exact
        return kernels.radial_moments(rho, a, kinds, params, t_nodes, w_nodes, k)

    vals = _chunked(chunk, design.U)
    mean, se = design.mean_se(vals)
    S = sphere_area(k)
    return Estimate(S * mean, S * se, len(design.U))


def measure_of_body(body, f, quad=QuadratureSpec()):
    """``mu(K) = int_K f``."""
    c = f.constant_value
    if c is not None:
        return volume(body, quad).scaled(c)
    n = body.dim
    return _radial_measure(body.gauge, lambda U: U, f, n, n, _design(n, quad), quad)


def _section_measure(body, B, f, quad, design):
    n, k = B.shape
    c = f.constant_value
    if c is not None:
        sec = subspace_restrict(body, Subspace(B))
        v = sec.closed_form_volume()
        est = Estimate(float(v), 0.0, 0) if v is not None else _polar_volume(sec, design)
        return est.scaled(c)
    return _radial_measure(body.gauge, lambda U: U @ B.T, f, n, k, design, quad)


def measure_of_section(body, H, f, quad=QuadratureSpec()):
    """``mu(K ∩ H)``: the ambient density integrated over the section."""
    if H.ambient_dim != body.dim:
        raise DimensionError(f"subspace in R^{H.ambient_dim} for a body in R^{body.dim}")
    B = np.array(H.basis)
    return _section_measure(body, B, f, quad, _design(B.shape[1], quad))


@dataclass
class MaxSectionResult:
    """Best subspace found.  ``estimate`` is a lower bound on the true maximum."""

    subspace: Subspace
    estimate: Estimate
    sampled_best: Estimate
    evaluations: int = 0
    history: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.subspace, self.estimate))


def _givens(B, i, j, angle):
    c, s = math.cos(angle), math.sin(angle)
    B = B.copy()
    bi, bj = B[i].copy(), B[j].copy()
    B[i] = c * bi - s * bj
    B[j] = s * bi + c * bj
    return B


def max_section(body, f, m, quad=QuadratureSpec(), subspace_samples=None, stream=STREAM_SUBSPACE):
    """Maximise ``mu(K ∩ H)`` over ``H`` in ``Gr_{n-m}``.

    Haar sampling followed by ``quad.refine_steps`` of Givens-rotation hill
    climbing (step halves on failure).  Every candidate is integrated with
    the same sphere nodes, so comparisons are free of sampling noise.  The
    returned value is a lower bound on the true maximum.
    """
    n = body.dim
    if not 1 <= m <= n - 1:
        raise ValueError(f"codimension out of range: need 1 <= m <= n-1, got n={n}, m={m}")
    count = int(subspace_samples or quad.subspace_samples)
    k = n - m
    design = _design(k, quad)
    bases = haar_bases(n, m, count, quad.seed, stream)

    def ev(B):
        return _section_measure(body, B, f, quad, design)

    ests = pmap(ev, list(bases))
    vals = np.array([e.value for e in ests])
    ibest = int(np.argmax(vals))
    B, best = bases[ibest], ests[ibest]
    sampled = best
    history = [best.value]
    rng = generator(quad.seed, STREAM_REFINE)
    step = 0.25
    evals = count
    for _ in range(int(quad.refine_steps)):
        i, j = rng.choice(n, size=2, replace=False)
        moved = False
        for sgn in (1.0, -1.0):
            B2 = _givens(B, i, j, sgn * step)
            e2 = ev(B2)
            evals += 1
            if e2.value > best.value:
                B, best, moved = B2, e2, True
                break
        if not moved:
            step = max(0.5 * step, 1e-4)
        history.append(best.value)
    # re-orthonormalise against drift from repeated rotations
    Q, R = np.linalg.qr(B)
    Q = Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
    return MaxSectionResult(Subspace(Q), best, sampled, evals, history)


# --------------------------------------------------------------------------
# independent oracle


def rejection_volume_oracle(body, f, count, seed=0):
    """``int_K f`` by uniform sampling of ``[-R, R]^n`` and acceptance ``||x||_K <= 1``.

    ``R`` is the larger of the body's certified outer radius and the largest
    radius seen on its extreme-direction grid.
    """
    n = body.dim
    if count < 1:
        raise ValueError("count must be >= 1")
    D = body.extreme_directions()
    R = max(body.outer_radius(), float(np.max(1.0 / body.gauge(D)))) * (1.0 + 1e-12)
    box = (2.0 * R) ** n

    def chunk(ic):
        idx, size = ic
        X = generator(seed, STREAM_REJECTION, idx).uniform(-R, R, size=(size, n))
        inside = body.gauge(X) <= 1.0
        y = np.zeros(size)
        if np.any(inside):
            y[inside] = f.evaluate(X[inside]) * box
        return float(y.sum()), float(np.dot(y, y))

    sums = pmap(chunk, enumerate(chunk_sizes(count)))
    s = sum(a for a, _ in sums)
    ss = sum(b for _, b in sums)
    mean = s / count
    var = max(ss / count - mean * mean, 0.0) * count / max(count - 1, 1)
    return Estimate(mean, math.sqrt(var / count), int(count))
