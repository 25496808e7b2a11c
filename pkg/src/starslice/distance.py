"""Geometric and Banach-Mazur distances between star bodies.

``d_G(K, L)`` is evaluated as ``max(rho_K / rho_L) * max(rho_L / rho_K)``
over a direction set.  Over a finite set this can only under-estimate the
true suprema, except for axis-aligned l_p/ball pairs whose extremal
directions (axes and diagonals) are always part of the set.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, logm
from scipy.optimize import minimize

from ._parallel import STREAM_DIRECTIONS, STREAM_OPTIMIZER, generator, pmap
from .bodies import DimensionError, EuclideanBall, LinearImage, LpBall, critical_directions
from .constants import classify

EXACT_GRID = "ExactGrid"
SAMPLED_LOWER = "SampledLowerBound"
OPTIMIZED_UPPER = "OptimizedUpperBound"


@dataclass
class DistanceResult:
    value: float
    witness_scale: float
    witness_map: np.ndarray = None
    certified: str = SAMPLED_LOWER
    candidate: object = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "value": self.value,
            "witness_scale": self.witness_scale,
            "witness_map": None if self.witness_map is None else np.asarray(self.witness_map).tolist(),
            "certified": self.certified,
            "candidate": None if self.candidate is None else self.candidate.to_spec(),
            **self.details,
        }


def direction_set(n, samples=100_000, seed=0):
    """Default direction set: 4,096-point half-circle grid (n = 2) or seeded samples."""
    if n == 2:
        t = np.arange(4096) * (math.pi / 4096)
        D = np.column_stack([np.cos(t), np.sin(t)])
    else:
        rng = generator(seed, STREAM_DIRECTIONS)
        D = rng.standard_normal((int(samples), n))
        D /= np.linalg.norm(D, axis=1)[:, None]
    return np.vstack([D, critical_directions(n)])


def _axis_aligned(body):
    return isinstance(body, (EuclideanBall, LpBall))


def _ratio_extremes(rK, rL):
    return float(np.max(rK / rL)), float(np.max(rL / rK))


def geometric_distance(K, L, directions=None, seed=0):
    """``d_G(K, L)`` with witness ``a = sup rho_K / rho_L`` (so ``K ⊂ aL ⊂ d_G K``)."""
    if K.dim != L.dim:
        raise DimensionError(f"bodies live in R^{K.dim} and R^{L.dim}")
    D = direction_set(K.dim, seed=seed) if directions is None else np.asarray(directions, dtype=np.float64)
    D = np.vstack([D, K.extreme_directions(), L.extreme_directions()])
    D = D / np.linalg.norm(D, axis=1)[:, None]
    a, b = _ratio_extremes(K.radial_many(D), L.radial_many(D))
    exact = K.dim == 2 or (_axis_aligned(K) and _axis_aligned(L))
    return DistanceResult(a * b, a, None, EXACT_GRID if exact else SAMPLED_LOWER)


def containment_violation(inner, outer, directions):
    """Largest relative excess of ``rho_inner`` over ``rho_outer`` on the directions."""
    D = np.asarray(directions, dtype=np.float64)
    return float(np.max(inner.radial_many(D) / outer.radial_many(D)) - 1.0)


# --------------------------------------------------------------------------
# Banach-Mazur upper bounds


def _n_skew(n):
    return n * (n - 1) // 2


def _skew(vec, n):
    A = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    A[iu] = vec
    return A - A.T


def _matrix(theta, n):
    s = _n_skew(n)
    U = expm(_skew(theta[:s], n))
    V = expm(_skew(theta[s + n:], n))
    return U @ np.diag(np.exp(theta[s:s + n])) @ V


def _reflection(n, flip):
    F = np.eye(n)
    if flip:
        F[-1, -1] = -1.0
    return F


def _theta_from_matrix(T):
    """Parameters and reflection flag with ``_matrix(theta) @ F == T``."""
    n = T.shape[0]
    flip = np.linalg.det(T) < 0
    U, S, Vt = np.linalg.svd(T @ _reflection(n, flip))
    if np.linalg.det(U) < 0:
        U[:, 0] *= -1
        Vt[0, :] *= -1
    iu = np.triu_indices(n, 1)
    a = np.real(logm(U))[iu]
    b = np.real(logm(Vt))[iu]
    return np.concatenate([a, np.log(S), b]), flip


def _same_body(A, B):
    return json.dumps(A.to_spec(), sort_keys=True) == json.dumps(B.to_spec(), sort_keys=True)


def _structural_starts(K, L):
    starts = []
    if isinstance(K, LinearImage) and _same_body(K.inner, L):
        starts.append(np.array(K.matrix))
    if isinstance(L, LinearImage) and _same_body(L.inner, K):
        starts.append(np.array(L.inverse))
    if isinstance(K, LinearImage) and isinstance(L, LinearImage) and _same_body(K.inner, L.inner):
        starts.append(K.matrix @ L.inverse)
    return starts


def bm_distance_upper(K, L, budget=8, seed=0, directions=None, opt_samples=4000, maxiter=None):
    """Upper bound on ``d_BM(K, L)`` by multi-start Nelder-Mead over ``T`` in GL_n.

    ``T = U diag(exp(s)) V`` with rotations ``U = expm(A)``, ``V = expm(B)``;
    ``budget`` is the number of restarts (identity and structural starts
    first, then seeded random ones).  The returned ``witness_map`` ``T`` and
    ``witness_scale`` ``a`` satisfy ``K ⊂ a T L ⊂ value * K`` on the final
    direction set.
    """
    if K.dim != L.dim:
        raise DimensionError(f"bodies live in R^{K.dim} and R^{L.dim}")
    if int(budget) < 1:
        raise ValueError("optimizer budget must be >= 1")
    n = K.dim
    base = direction_set(n, samples=opt_samples, seed=seed)
    base = np.vstack([base, K.extreme_directions()])
    base /= np.linalg.norm(base, axis=1)[:, None]
    rK = K.radial_many(base)
    L_ext = L.extreme_directions()

    def objective(theta, F):
        T = _matrix(theta, n) @ F
        TL = LinearImage(L, T)
        img = L_ext @ T.T
        img /= np.linalg.norm(img, axis=1)[:, None]
        a, b = _ratio_extremes(rK, TL.radial_many(base))
        a2, b2 = _ratio_extremes(K.radial_many(img), TL.radial_many(img))
        return math.log(max(a, a2) * max(b, b2))

    dim = 2 * _n_skew(n) + n
    starts = [(np.zeros(dim), False)] + [_theta_from_matrix(T) for T in _structural_starts(K, L)]
    rng = generator(seed, STREAM_OPTIMIZER)
    while len(starts) < int(budget):
        th = np.concatenate([rng.uniform(-math.pi, math.pi, _n_skew(n)),
                             rng.normal(0.0, 0.5, n),
                             rng.uniform(-math.pi, math.pi, _n_skew(n))])
        starts.append((th, False))
    starts = starts[:max(int(budget), 1 + len(_structural_starts(K, L)))]
    opts = {"xatol": 1e-10, "fatol": 1e-13, "maxiter": maxiter or 600 * dim, "maxfev": maxiter or 600 * dim}

    def run(start):
        th0, flip = start
        F = _reflection(n, flip)
        f0 = objective(th0, F)
        if f0 <= 1e-14:
            return f0, _matrix(th0, n) @ F
        best = minimize(objective, th0, args=(F,), method="Nelder-Mead", options=opts)
        # restart from the optimum: NM simplices collapse early on kinked objectives
        for _ in range(3):
            again = minimize(objective, best.x, args=(F,), method="Nelder-Mead", options=opts)
            if again.fun >= best.fun - 1e-14:
                break
            best = again
        return float(best.fun), _matrix(best.x, n) @ F

    exact = [s for s in starts if objective(s[0], _reflection(n, s[1])) <= 1e-14]
    runs = [run(exact[0])] if exact else pmap(run, starts)
    fbest, T = min(runs, key=lambda r: r[0])
    final = geometric_distance(K, LinearImage(L, T), directions=directions, seed=seed)
    return DistanceResult(final.value, final.witness_scale, T, OPTIMIZED_UPPER,
                          details={"restarts": len(starts), "objective": math.exp(fbest)})


def distance_to_class(L, tag, candidates, budget=8, seed=0):
    """Upper bound on the Banach-Mazur distance from ``L`` to a class.

    Minimum of :func:`bm_distance_upper` over candidate bodies that carry
    ``tag``; ``L`` itself is a candidate when it is tagged.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("empty candidate list")
    for c in candidates:
        if tag not in classify(c):
            raise ValueError(f"candidate {c.family} is not tagged {tag}")
    if tag in classify(L) and not any(_same_body(L, c) for c in candidates):
        candidates = [L] + candidates
    best = None
    for c in candidates:
        r = bm_distance_upper(L, c, budget=budget, seed=seed)
        r.candidate = c
        if best is None or r.value < best.value:
            best = r
        if best.value <= 1.0 + 1e-12:
            break  # d_BM >= 1, nothing can beat this
    return best


def normalize_into(L, result):
    """Turn a distance witness into ``K'`` with ``(1/d) K' ⊂ L ⊂ K'``.

    ``result`` comes from ``bm_distance_upper(L, K)`` or
    :func:`distance_to_class`; returns ``(K', d)``.
    """
    K = result.candidate
    if K is None:
        raise ValueError("distance result carries no candidate body")
    T = np.eye(L.dim) if result.witness_map is None else np.asarray(result.witness_map)
    return LinearImage(K, result.witness_scale * T), result.value
