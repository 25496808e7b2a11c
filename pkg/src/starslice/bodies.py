"""Origin-symmetric star bodies described by their Minkowski functionals.

Every body exposes a vectorised :meth:`StarBody.gauge` acting on ``(N, n)``
arrays; the radial function is its reciprocal on unit vectors.  Bodies are
immutable and evaluation is pure, so they can be shared between threads.
"""
import itertools
import math

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from ._parallel import STREAM_GRID, generator

UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10


class DimensionError(ValueError):
    pass


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _as_points(X, n):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n:
        raise DimensionError(f"expected points of dimension {n}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite coordinates")
    return X


def _lgamma_ball(n):
    return 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)


def canonical_sign(D):
    """Flip rows so that the first non-zero coordinate is positive.

    ``canonical_sign(-D) == canonical_sign(D)`` holds bit-for-bit, which is
    what makes tabulated bodies exactly even.
    """
    D = np.asarray(D, dtype=np.float64)
    nz = D != 0
    first = np.argmax(nz, axis=1)
    lead = D[np.arange(len(D)), first]
    return np.where((lead < 0)[:, None], -D, D)


def critical_directions(n):
    """Coordinate axes, 2-term diagonals and main diagonals (one per antipodal pair)."""
    dirs = [np.eye(n)]
    pairs = []
    for i, j in itertools.combinations(range(n), 2):
        for s in (1.0, -1.0):
            v = np.zeros(n)
            v[i], v[j] = 1.0, s
            pairs.append(v / math.sqrt(2.0))
    if pairs:
        dirs.append(np.array(pairs))
    if n <= 12:
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=n - 1)))
        diag = np.hstack([np.ones((len(signs), 1)), signs]) / math.sqrt(n)
        dirs.append(diag)
    return np.vstack(dirs)


class StarBody:
    """Base class.  Subclasses implement :meth:`gauge`."""

    dim: int
    family = "abstract"

    def gauge(self, X):
        raise NotImplementedError

    def radial_many(self, D):
        return 1.0 / self.gauge(D)

    def closed_form_volume(self):
        """Exact volume when a formula exists, else ``None``."""
        return None

    def outer_radius(self):
        """An upper bound on ``max rho_K`` over the sphere."""
        raise NotImplementedError

    def extreme_directions(self):
        """Directions where the radial function is likely extremal."""
        return critical_directions(self.dim)

    def to_spec(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_spec()!r})"


class EuclideanBall(StarBody):
    family = "ball"

    def __init__(self, n, radius=1.0):
        if n < 1:
            raise DimensionError("dimension must be >= 1")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.dim = int(n)
        self.radius = float(radius)

    def gauge(self, X):
        X = _as_points(X, self.dim)
        return np.sqrt(np.einsum("ij,ij->i", X, X)) / self.radius

    def closed_form_volume(self):
        return math.exp(_lgamma_ball(self.dim)) * self.radius ** self.dim

    def outer_radius(self):
        return self.radius

    def to_spec(self):
        return {"family": "ball", "n": self.dim, "radius": self.radius}


class LpBall(StarBody):
    """``{x : ||x||_p <= scale}`` for ``p`` in ``(0, inf]``; non-convex when ``p < 1``."""

    family = "lp"

    def __init__(self, n, p, scale=1.0):
        if n < 1:
            raise DimensionError("dimension must be >= 1")
        p = float(p)
        if not p > 0:
            raise ValueError("p must be positive")
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.dim = int(n)
        self.p = p
        self.scale = float(scale)

    def gauge(self, X):
        X = _as_points(X, self.dim)
        return kernels.lp_gauge(X, self.p) / self.scale

    def closed_form_volume(self):
        n, p = self.dim, self.p
        if math.isinf(p):
            return (2.0 * self.scale) ** n
        logv = n * (math.log(2.0) + math.lgamma(1.0 + 1.0 / p)) - math.lgamma(1.0 + n / p)
        return math.exp(logv) * self.scale ** n

    def outer_radius(self):
        if self.p >= 2:
            exponent = 0.5 if math.isinf(self.p) else 0.5 - 1.0 / self.p
            return self.scale * self.dim ** exponent
        return self.scale

    def to_spec(self):
        p = "inf" if math.isinf(self.p) else self.p
        return {"family": "lp", "n": self.dim, "p": p, "scale": self.scale}


class Ellipsoid(StarBody):
    """``{x : x^T A x <= 1}`` with ``A`` symmetric positive-definite."""

    family = "ellipsoid"

    def __init__(self, matrix):
        A = np.asarray(matrix, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise DimensionError("ellipsoid matrix must be square")
        if not np.all(np.isfinite(A)):
            raise ValueError("non-finite ellipsoid matrix")
        A = 0.5 * (A + A.T)
        w = np.linalg.eigvalsh(A)
        if w.min() <= 0:
            raise ValueError("ellipsoid matrix must be positive-definite")
        self.dim = A.shape[0]
        self.matrix = _frozen(A)
        self._eig = (float(w.min()), float(w.max()))

    @classmethod
    def from_axes(cls, axes):
        axes = np.asarray(axes, dtype=np.float64)
        if np.any(axes <= 0):
            raise ValueError("semi-axes must be positive")
        return cls(np.diag(1.0 / axes ** 2))

    def gauge(self, X):
        X = _as_points(X, self.dim)
        return kernels.quadform_gauge(X, self.matrix)

    def closed_form_volume(self):
        sign, logdet = np.linalg.slogdet(self.matrix)
        return math.exp(_lgamma_ball(self.dim) - 0.5 * logdet)

    def outer_radius(self):
        return 1.0 / math.sqrt(self._eig[0])

    def to_spec(self):
        return {"family": "ellipsoid", "matrix": self.matrix.tolist()}


class LinearImage(StarBody):
    """``T K`` for an invertible ``T``; ``||x||_{TK} = ||T^{-1} x||_K``."""

    family = "linear_image"

    def __init__(self, inner, matrix):
        T = np.asarray(matrix, dtype=np.float64)
        if T.shape != (inner.dim, inner.dim):
            raise DimensionError(f"matrix must be {inner.dim}x{inner.dim}")
        if not np.all(np.isfinite(T)):
            raise ValueError("non-finite matrix")
        s = np.linalg.svd(T, compute_uv=False)
        if s.min() <= 1e-14 * max(s.max(), 1e-300):
            raise ValueError("matrix is singular")
        self.inner = inner
        self.dim = inner.dim
        self.matrix = _frozen(T)
        self.inverse = _frozen(np.linalg.inv(T))
        self._smax = float(s.max())

    def gauge(self, X):
        X = _as_points(X, self.dim)
        return self.inner.gauge(X @ self.inverse.T)

    def closed_form_volume(self):
        v = self.inner.closed_form_volume()
        if v is None:
            return None
        return abs(float(np.linalg.det(self.matrix))) * v

    def outer_radius(self):
        return self._smax * self.inner.outer_radius()

    def extreme_directions(self):
        D = self.inner.extreme_directions() @ self.matrix.T
        D = np.vstack([D / np.linalg.norm(D, axis=1)[:, None], critical_directions(self.dim)])
        return D

    def to_spec(self):
        return {"family": "linear_image", "inner": self.inner.to_spec(), "matrix": self.matrix.tolist()}


class SectionBody(StarBody):
    """``K ∩ H`` in the coordinates of an orthonormal basis of ``H``."""

    family = "section"

    def __init__(self, inner, basis):
        B = np.asarray(basis, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != inner.dim:
            raise DimensionError("basis rows must match the ambient dimension")
        self.inner = inner
        self.basis = _frozen(B)
        self.dim = B.shape[1]

    def gauge(self, X):
        X = _as_points(X, self.dim)
        return self.inner.gauge(X @ self.basis.T)

    def outer_radius(self):
        return self.inner.outer_radius()

    def extreme_directions(self):
        D = self.inner.extreme_directions() @ self.basis
        norms = np.linalg.norm(D, axis=1)
        D = D[norms > 1e-9] / norms[norms > 1e-9][:, None]
        return np.vstack([D, critical_directions(self.dim)]) if len(D) else critical_directions(self.dim)

    def to_spec(self):
        return {"family": "section", "inner": self.inner.to_spec(), "basis": self.basis.tolist()}


# --------------------------------------------------------------------------
# tabulated bodies


def icosphere(frequency):
    """Geodesic grid: vertices and triangles of a subdivided icosahedron.

    ``frequency = 16`` gives the 2,562-node grid.  The vertex set is closed
    under ``x -> -x``.
    """
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    V = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    F = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    f = int(frequency)
    if f < 1:
        raise ValueError("frequency must be >= 1")
    index = {}
    verts = []
    tris = []

    def vid(p):
        p = p / np.linalg.norm(p)
        key = tuple(np.round(p, 9) + 0.0)
        if key not in index:
            index[key] = len(verts)
            verts.append(p)
        return index[key]

    for a, b, c in F:
        A, B, C = V[a], V[b], V[c]
        ids = {}
        for i in range(f + 1):
            for j in range(f + 1 - i):
                k = f - i - j
                ids[i, j] = vid((i * A + j * B + k * C) / f)
        for i in range(f):
            for j in range(f - i):
                tris.append((ids[i, j], ids[i + 1, j], ids[i, j + 1]))
                if i + j + 1 < f:
                    tris.append((ids[i + 1, j], ids[i + 1, j + 1], ids[i, j + 1]))
    return np.array(verts), np.array(tris, dtype=np.int64)


def paired_random_nodes(n, count, seed=0):
    """``count // 2`` canonical Haar directions; antipodes are implicit."""
    rng = generator(seed, STREAM_GRID)
    G = rng.standard_normal((max(count // 2, 1), n))
    G /= np.linalg.norm(G, axis=1)[:, None]
    return canonical_sign(G)


def default_grid_nodes(n, seed=0):
    """Default symmetric grid: 2,562-node icosphere for n = 3, 2,000 paired nodes otherwise."""
    if n == 2:
        t = (np.arange(1024) + 0.5) * math.pi / 1024
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        verts, _ = icosphere(16)
        return _canonical_unique(verts)
    return paired_random_nodes(n, 2000, seed)


def _canonical_unique(D):
    C = canonical_sign(D)
    _, first = np.unique(np.round(C, 9) + 0.0, axis=0, return_index=True)
    return C[np.sort(first)]


class RadialGrid(StarBody):
    """Star body given by radial values on one node of each antipodal pair.

    Interpolation rules: ``"angular"`` (piecewise linear in angle, n = 2),
    ``"barycentric"`` (spherical barycentric on the icosphere triangulation,
    n = 3) and ``"blend"`` (continuous k-nearest-node Shepard blend, n >= 4).
    Queries are mapped to their canonical sign first, so evenness is exact.
    """

    family = "radial_grid"

    def __init__(self, nodes, values, rule=None, origin=None, std_errors=None):
        N = np.asarray(nodes, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        if N.ndim != 2 or N.shape[1] < 2:
            raise DimensionError("nodes must be an (N, n) array with n >= 2")
        if v.shape != (len(N),):
            raise ValueError("one value per node required")
        if np.any(np.abs(np.linalg.norm(N, axis=1) - 1.0) > 1e-9):
            raise ValueError("grid nodes must be unit vectors")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("radial values must be positive and finite")
        n = N.shape[1]
        if rule is None:
            rule = {2: "angular", 3: "barycentric"}.get(n, "blend")
        if rule == "angular" and n != 2 or rule == "barycentric" and n != 3:
            raise ValueError(f"rule {rule!r} is not available in dimension {n}")
        if rule not in ("angular", "barycentric", "blend"):
            raise ValueError(f"unknown interpolation rule {rule!r}")
        C = canonical_sign(N)
        self.dim = n
        self.nodes = _frozen(C)
        self.values = _frozen(v)
        self.rule = rule
        self.origin = origin
        self.std_errors = None if std_errors is None else _frozen(std_errors)
        full = np.vstack([C, -C])
        self._full_values = np.concatenate([v, v])
        self._tree = cKDTree(full)
        self._full = full
        if rule == "angular":
            ang = np.mod(np.arctan2(C[:, 1], C[:, 0]), math.pi)
            order = np.argsort(ang)
            self._ang, self._angv = ang[order], v[order]
        elif rule == "barycentric":
            self._setup_triangulation(full)

    @classmethod
    def tabulate(cls, body, nodes=None, rule=None, origin=None, seed=0):
        """Sample ``body``'s radial function on a symmetric grid."""
        if nodes is None:
            nodes = default_grid_nodes(body.dim, seed)
        nodes = _canonical_unique(nodes)
        return cls(nodes, body.radial_many(nodes), rule=rule, origin=origin)

    def _setup_triangulation(self, full):
        from scipy.spatial import ConvexHull

        tris = ConvexHull(full).simplices
        M = full[tris].transpose(0, 2, 1)  # columns are vertices
        self._tris = tris
        self._tri_inv = np.linalg.inv(M)
        inc = [[] for _ in range(len(full))]
        for t, (a, b, c) in enumerate(tris):
            inc[a].append(t)
            inc[b].append(t)
            inc[c].append(t)
        width = max(len(x) for x in inc)
        self._incident = np.array([x + [x[0]] * (width - len(x)) for x in inc], dtype=np.int64)

    def _bary(self, D, nearest):
        cand = self._incident[nearest]  # (N, w)
        lam = np.einsum("nwij,nj->nwi", self._tri_inv[cand], D)
        score = lam.min(axis=2)
        best = np.argmax(score, axis=1)
        rows = np.arange(len(D))
        tri = cand[rows, best]
        lam = lam[rows, best]
        bad = score[rows, best] < -1e-12
        if np.any(bad):
            all_lam = np.einsum("tij,nj->nti", self._tri_inv, D[bad])
            b2 = np.argmax(all_lam.min(axis=2), axis=1)
            tri[bad] = b2
            lam[bad] = all_lam[np.arange(bad.sum()), b2]
        vals = self._full_values[self._tris[tri]]
        lam = np.maximum(lam, 0.0)
        return np.sum(lam * vals, axis=1) / np.sum(lam, axis=1)

    def _interp(self, D):
        D = canonical_sign(D)
        if self.rule == "angular":
            ang = np.mod(np.arctan2(D[:, 1], D[:, 0]), math.pi)
            out = np.interp(ang, self._ang, self._angv, period=math.pi)
            dist, idx = self._tree.query(D, k=1)
        elif self.rule == "barycentric":
            dist, idx = self._tree.query(D, k=1)
            out = self._bary(D, idx)
        else:
            k = min(2 * self.dim, len(self._full) - 1)
            dist, idx = self._tree.query(D, k=k + 1)
            h = dist[:, -1:]
            d = dist[:, :-1]
            w = np.clip(1.0 - d / h, 0.0, None) ** 2 / np.maximum(d * d, 1e-300)
            out = np.sum(w * self._full_values[idx[:, :-1]], axis=1) / np.sum(w, axis=1)
            dist, idx = dist[:, 0], idx[:, 0]
        snap = dist < 1e-12
        return np.where(snap, self._full_values[idx], out)

    def gauge(self, X):
        X = _as_points(X, self.dim)
        r = np.linalg.norm(X, axis=1)
        out = np.zeros(len(X))
        nz = r > 0
        if np.any(nz):
            out[nz] = r[nz] / self._interp(X[nz] / r[nz][:, None])
        return out

    def outer_radius(self):
        return float(self.values.max())

    def extreme_directions(self):
        return np.vstack([self.nodes, critical_directions(self.dim)])

    def to_spec(self):
        return {
            "family": "radial_grid",
            "nodes": self.nodes.tolist(),
            "values": self.values.tolist(),
            "rule": self.rule,
            "origin": self.origin,
            "std_errors": None if self.std_errors is None else self.std_errors.tolist(),
        }


# --------------------------------------------------------------------------
# subspaces


class Subspace:
    """An ``(n - m)``-dimensional linear subspace with orthonormal basis columns."""

    def __init__(self, basis):
        B = np.asarray(basis, dtype=np.float64)
        if B.ndim != 2:
            raise DimensionError("basis must be a 2-d array")
        n, k = B.shape
        if not 1 <= k <= n - 1:
            raise ValueError(f"codimension out of range: basis is {n}x{k}")
        if not np.all(np.isfinite(B)):
            raise ValueError("non-finite basis")
        if np.max(np.abs(B.T @ B - np.eye(k))) > ORTHO_TOL:
            raise ValueError("basis columns are not orthonormal")
        self.basis = _frozen(B)

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def codim(self):
        return self.ambient_dim - self.dim

    @classmethod
    def span(cls, vectors):
        """Orthonormalise the given spanning vectors (rows)."""
        A = np.atleast_2d(np.asarray(vectors, dtype=np.float64)).T
        Q, R = np.linalg.qr(A)
        return cls(Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R))))

    @classmethod
    def hyperplane(cls, normal):
        """``normal^perp``."""
        xi = np.asarray(normal, dtype=np.float64)
        xi = xi / np.linalg.norm(xi)
        _, _, Vt = np.linalg.svd(xi[None, :])
        return cls(Vt[1:].T)

    def projector(self):
        return self.basis @ self.basis.T

    def __repr__(self):
        return f"Subspace(n={self.ambient_dim}, dim={self.dim})"


def as_direction(d, n=None):
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 1 or len(d) < 2:
        raise DimensionError("a direction is a vector of length >= 2")
    if n is not None and len(d) != n:
        raise DimensionError(f"direction of length {len(d)} for a body in dimension {n}")
    if not np.all(np.isfinite(d)):
        raise ValueError("non-finite direction")
    if abs(np.linalg.norm(d) - 1.0) > UNIT_TOL:
        raise ValueError("direction is not a unit vector")
    return d


def minkowski(body, x):
    """``||x||_K``; zero exactly at the origin."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("x must be a vector")
    return float(body.gauge(_as_points(x, body.dim))[0])


def radial(body, d):
    """``rho_K(d) = 1 / ||d||_K`` for a unit vector ``d``."""
    d = as_direction(d, body.dim)
    return float(1.0 / body.gauge(d[None, :])[0])


def _quadratic_form(body):
    """Matrix ``A`` with ``||x||_K^2 = x^T A x``, when the body is an ellipsoid."""
    if isinstance(body, EuclideanBall):
        return np.eye(body.dim) / body.radius ** 2
    if isinstance(body, Ellipsoid):
        return np.array(body.matrix)
    if isinstance(body, LinearImage):
        A = _quadratic_form(body.inner)
        if A is not None:
            return body.inverse.T @ A @ body.inverse
    if isinstance(body, LpBall) and body.p == 2.0:
        return np.eye(body.dim) / body.scale ** 2
    return None


def subspace_restrict(body, H):
    """``K ∩ H`` as a star body in ``dim H`` coordinates ``y -> ||H.basis y||_K``.

    Euclidean balls and ellipsoids restrict to closed-form families, and
    l_p balls restricted to (signed) coordinate subspaces stay l_p balls, so
    their section volumes keep exact fast paths.
    """
    if H.ambient_dim != body.dim:
        raise DimensionError(f"subspace in R^{H.ambient_dim} for a body in R^{body.dim}")
    B = np.array(H.basis)
    k = B.shape[1]
    if isinstance(body, EuclideanBall):
        return EuclideanBall(k, body.radius)
    if isinstance(body, LpBall):
        if body.p == 2.0:
            return LpBall(k, 2.0, body.scale)
        nz = np.abs(B) > 1e-13
        if np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) <= 1) and np.allclose(np.abs(B[nz]), 1.0, atol=1e-13, rtol=0):
            return LpBall(k, body.p, body.scale)
    A = _quadratic_form(body)
    if A is not None:
        return Ellipsoid(B.T @ A @ B)
    return SectionBody(body, B)
