"""Numerical verification of slicing inequalities.

Every verifier returns an :class:`InequalityReport` comparing a left-hand
side ``lhs`` with a right-hand side ``rhs``:

* ``Pass`` -- ``lhs <= rhs + 4 sigma`` (plus a 1e-12 relative float slack)
* ``Fail`` -- otherwise, when both sides have relative error <= 5 %
* ``Inconclusive`` -- otherwise, or when a class precondition is not met

``sigma`` is the combined standard error of both sides.  Maxima over
Grassmannians are lower bounds, so they sit on the right-hand side only and
a ``Pass`` is conservative; a ``Fail`` is re-checked with ten times as many
subspaces before it is reported.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._parallel import STREAM_EXTENDED, STREAM_SWEEP, pmap
from .bodies import EuclideanBall, LinearImage, LpBall
from .constants import (
    SUBSPACE_LP_POS, GeneralizedMIntersection, IntersectionBody, c_nm, classify,
    is_convex, lewis_bound,
)
from .distance import (
    bm_distance_upper, containment_violation, direction_set, distance_to_class,
    geometric_distance, normalize_into,
)
from .quadrature import Constant, Estimate, QuadratureSpec, max_section, measure_of_body, volume

PASS = "Pass"
FAIL = "Fail"
INCONCLUSIVE = "Inconclusive"
EXPLORATORY = "Exploratory"
ERROR = "Error"

SIGMAS = 4.0
FLOAT_RTOL = 1e-12
CONFIDENT_REL = 0.05
CONTAINMENT_RTOL = 1e-9

HYPER = "HYPER"
HYPER_INT = "HYPER_INT"
ARBMEAS = "ARBMEAS"
SQRTN2 = "SQRTN2"
MAIN_LP = "MAIN_LP"
THM1 = "THM1"
STABILITY = "STABILITY"
P_GT_2 = "P_GT_2"
COR_KINT = "COR_KINT"


class PreconditionError(ValueError):
    pass


class ContainmentError(PreconditionError):
    pass


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


@dataclass
class InequalityReport:
    inequality_id: str
    lhs: Estimate
    rhs: Estimate
    ratio: float
    margin_sigma: float
    argmax_subspace: object
    parameters: dict
    verdict: str
    warnings: list = field(default_factory=list)
    trace: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def sigma(self):
        if self.lhs is None or self.rhs is None:
            return None
        return math.hypot(self.lhs.std_error, self.rhs.std_error)

    def to_dict(self, compare=False):
        d = {
            "inequality_id": self.inequality_id,
            "lhs": None if self.lhs is None else self.lhs.to_dict(),
            "rhs": None if self.rhs is None else self.rhs.to_dict(),
            "ratio": _finite_or_none(self.ratio),
            "margin_sigma": _finite_or_none(self.margin_sigma),
            "sigma": self.sigma,
            "argmax_subspace": None if self.argmax_subspace is None else self.argmax_subspace.basis.tolist(),
            "parameters": self.parameters,
            "verdict": self.verdict,
            "warnings": list(self.warnings),
            "trace": self.trace,
        }
        if not compare:
            d["metadata"] = self.metadata
        return d


def decide(lhs, rhs):
    """Verdict for ``lhs <= rhs`` under the 4-sigma rule."""
    sigma = math.hypot(lhs.std_error, rhs.std_error)
    slack = SIGMAS * sigma + FLOAT_RTOL * max(abs(lhs.value), abs(rhs.value))
    if lhs.value <= rhs.value + slack:
        return PASS

    def confident(e):
        return e.std_error <= CONFIDENT_REL * abs(e.value)

    return FAIL if confident(lhs) and confident(rhs) else INCONCLUSIVE


def _margin(lhs, rhs):
    sigma = math.hypot(lhs.std_error, rhs.std_error)
    gap = rhs.value - lhs.value
    if sigma == 0:
        return math.copysign(math.inf, gap) if gap else 0.0
    return gap / sigma


def _ratio(lhs, rhs):
    return lhs.value / rhs.value if rhs.value else math.inf


def _report(iid, lhs, rhs, ms, params, warnings=(), trace=None, force=None):
    verdict = force or decide(lhs, rhs)
    return InequalityReport(
        iid, lhs, rhs, _ratio(lhs, rhs), _margin(lhs, rhs),
        None if ms is None else ms.subspace, params, verdict,
        list(warnings), trace or {},
    )


def _density_spec(f):
    return f.to_spec() if hasattr(f, "to_spec") else repr(f)


def _params(body, m, f=None, **extra):
    spec = body.to_spec()
    p = spec.get("p") if spec.get("family") == "lp" else None
    out = {"n": body.dim, "m": m, "family": body.family, "p": p, "body": spec}
    if f is not None:
        out["density"] = _density_spec(f)
    out.update(extra)
    return out


def _max_with_retry(body, f, m, quad, rhs_of, lhs):
    """Max-section search; on a Fail the search is repeated with 10x subspaces."""
    ms = max_section(body, f, m, quad)
    if decide(lhs, rhs_of(ms.estimate)) == FAIL:
        wide = max_section(body, f, m, quad, subspace_samples=10 * quad.subspace_samples,
                           stream=STREAM_EXTENDED)
        if wide.estimate.value > ms.estimate.value:
            ms = wide
    return ms


def _slicing_factor(n, m, vol):
    return vol.power(m / n).scaled(n / (n - m) * c_nm(n, m))


# --------------------------------------------------------------------------
# hyperplane inequalities


def verify_hyper_int(K, quad=QuadratureSpec()):
    """``|K|^((n-1)/n) <= c_n max_xi |K ∩ xi^perp|`` for intersection bodies."""
    n = K.dim
    warnings = []
    if IntersectionBody() not in classify(K):
        warnings.append("body is not tagged IntersectionBody; inequality not claimed")
    lhs = volume(K, quad).power((n - 1) / n)
    c = c_nm(n, 1)
    ms = _max_with_retry(K, Constant(1.0), 1, quad, lambda e: e.scaled(c), lhs)
    rhs = ms.estimate.scaled(c)
    return _report(HYPER_INT, lhs, rhs, ms, _params(K, 1, Constant(1.0)), warnings,
                   force=INCONCLUSIVE if warnings else None)


def _arbmeas_parts(K, f, quad, mult):
    n = K.dim
    vol = volume(K, quad)
    lhs = measure_of_body(K, f, quad)
    factor = _slicing_factor(n, 1, vol)

    def rhs_of(e):
        return (e * factor).scaled(mult)

    ms = _max_with_retry(K, f, 1, quad, rhs_of, lhs)
    return lhs, rhs_of(ms.estimate), ms


def verify_arbmeas(K, f, quad=QuadratureSpec()):
    """``mu(K) <= n/(n-1) c_n max_xi mu(K ∩ xi^perp) |K|^(1/n)`` for intersection bodies."""
    warnings = []
    if IntersectionBody() not in classify(K):
        warnings.append("body is not tagged IntersectionBody; inequality not claimed")
    lhs, rhs, ms = _arbmeas_parts(K, f, quad, 1.0)
    return _report(ARBMEAS, lhs, rhs, ms, _params(K, 1, f), warnings,
                   force=INCONCLUSIVE if warnings else None)


def verify_sqrtn2(K, f, quad=QuadratureSpec()):
    """The arbitrary-measure inequality with an extra ``sqrt(n)``, for convex bodies."""
    warnings = []
    if not is_convex(K):
        warnings.append("body is not on the convex whitelist; inequality not claimed")
    lhs, rhs, ms = _arbmeas_parts(K, f, quad, math.sqrt(K.dim))
    return _report(SQRTN2, lhs, rhs, ms, _params(K, 1, f), warnings,
                   force=INCONCLUSIVE if warnings else None)


def verify_hyper(K, f=Constant(1.0), quad=QuadratureSpec()):
    """The open hyperplane case: arbitrary-measure form with no extra factor.

    Never a Pass/Fail claim; the verdict is always ``Exploratory``.
    """
    lhs, rhs, ms = _arbmeas_parts(K, f, quad, 1.0)
    return _report(HYPER, lhs, rhs, ms, _params(K, 1, f), force=EXPLORATORY)


# --------------------------------------------------------------------------
# distance-based inequalities


def _check_dirs(L, K, seed=0):
    D = np.vstack([direction_set(L.dim, seed=seed), L.extreme_directions(), K.extreme_directions()])
    return D / np.linalg.norm(D, axis=1)[:, None]


def containment_report(L, K, d, directions=None):
    """Excess of ``rho_K / d`` over ``rho_L`` and of ``rho_L`` over ``rho_K``."""
    D = _check_dirs(L, K) if directions is None else directions
    inner = containment_violation(LinearImage(K, np.eye(K.dim) / d), L, D)
    outer = containment_violation(L, K, D)
    return {
        "inner_excess": inner,
        "outer_excess": outer,
        "holds": inner <= CONTAINMENT_RTOL and outer <= CONTAINMENT_RTOL,
        "directions": int(len(D)),
    }


def volume_step_check(K, L, d, quad=QuadratureSpec()):
    """``|K| <= d^n |L|``; equality when ``L = K / d``."""
    n = K.dim
    vK = volume(K, quad)
    vL = volume(L, quad).scaled(d ** n)
    sigma = math.hypot(vK.std_error, vL.std_error)
    slack = SIGMAS * sigma + FLOAT_RTOL * max(vK.value, vL.value)
    return {
        "volume_K": vK.to_dict(),
        "d^n volume_L": vL.to_dict(),
        "ratio": vK.value / vL.value,
        "holds": vK.value <= vL.value + slack,
        "equal_within_4sigma": abs(vK.value - vL.value) <= slack,
    }


def _thm1_core(iid, L, K, d, m, f, quad, warnings, extra_params=None, containment=None):
    n = L.dim
    c = c_nm(n, m)
    vol_L = volume(L, quad)
    vol_K = volume(K, quad)
    lhs = measure_of_body(L, f, quad)
    factor = _slicing_factor(n, m, vol_L)

    def rhs_of(e, dd=d):
        return (e * factor).scaled(dd ** m)

    ms = _max_with_retry(L, f, m, quad, rhs_of, lhs)
    eps = ms.estimate
    rhs = rhs_of(eps)
    via_K = (eps * vol_K.power(m / n)).scaled(n / (n - m) * c)
    trace = {
        "epsilon": eps.to_dict(),
        "stability_step": {
            "mu_L": lhs.to_dict(),
            "bound_via_K": via_K.to_dict(),
            "holds": decide(lhs, via_K) == PASS,
        },
        "volume_step": volume_step_check(K, L, d, quad),
        "final_bound": rhs.to_dict(),
        "containment": containment,
    }
    params = _params(L, m, f, d=d, K=K.to_spec())
    params.update(extra_params or {})
    force = INCONCLUSIVE if warnings else None
    return _report(iid, lhs, rhs, ms, params, warnings, trace, force), rhs_of, lhs, ms


def verify_thm1(L, K, d, m, f, quad=QuadratureSpec()):
    """``mu(L) <= d^m n/(n-m) c_{n,m} max_H mu(L ∩ H) |L|^(m/n)`` given ``(1/d)K ⊂ L ⊂ K``.

    The containment is checked on a direction sample and a violation raises
    :class:`ContainmentError`.  The report's ``trace`` records the
    intermediate quantities of the argument: ``epsilon`` (the maximal section
    measure), the bound obtained through ``K`` and the ``|K| <= d^n |L|`` step.
    """
    if not 1 <= m <= L.dim - 1:
        raise PreconditionError("codimension out of range")
    if not d >= 1:
        raise PreconditionError("distance parameter d must be >= 1")
    warnings = []
    if GeneralizedMIntersection(m) not in classify(K):
        warnings.append(f"K is not tagged GeneralizedMIntersection({m})")
    cont = containment_report(L, K, d)
    if not cont["holds"]:
        raise ContainmentError(
            f"(1/d)K ⊂ L ⊂ K violated: inner excess {cont['inner_excess']:.3e}, "
            f"outer excess {cont['outer_excess']:.3e}")
    rep, *_ = _thm1_core(THM1, L, K, d, m, f, quad, warnings, containment=cont)
    return rep


def default_candidates(n):
    return [EuclideanBall(n), LpBall(n, 2.0)]


def _smallest_d(lhs, rhs_of, eps, d_max):
    """Smallest ``d' in [1, d_max]`` giving Pass (bisection), or ``None``."""
    if decide(lhs, rhs_of(eps, 1.0)) == PASS:
        return 1.0
    if decide(lhs, rhs_of(eps, d_max)) != PASS:
        return None
    lo, hi = 1.0, d_max
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if decide(lhs, rhs_of(eps, mid)) == PASS:
            hi = mid
        else:
            lo = mid
    return hi


def verify_main_lp(L, m, f, quad=QuadratureSpec(), d=None, candidates=None, budget=4,
                   inequality=MAIN_LP, p=None, k=None):
    """Slicing inequality with a user-supplied (or witnessed) distance constant.

    ``K`` is chosen by :func:`distance_to_class` among ``candidates``.  When
    ``d`` is omitted the witnessed distance is used.  The report also gives
    the smallest ``d'`` in ``[1, d]`` for which the comparison passes, and
    for ``m = 1`` the corresponding hyperplane constant
    ``D = d' n/(n-1) c_{n,1}``.
    """
    n = L.dim
    if not 1 <= m <= n - 1:
        raise PreconditionError("codimension out of range")
    warnings = []
    if not is_convex(L):
        warnings.append("L is not on the convex whitelist")
    tag = GeneralizedMIntersection(m)
    cands = default_candidates(n) if candidates is None else list(candidates)
    dist = distance_to_class(L, tag, cands, budget=budget, seed=quad.seed)
    K, d_found = normalize_into(L, dist)
    d_found = max(d_found, 1.0)
    if d is None:
        d = d_found
    elif d < d_found * (1 - 1e-9):
        warnings.append(f"supplied d={d} is below the witnessed distance {d_found}; hypothesis not witnessed")
    cont = containment_report(L, K, d_found)
    extra = {"d_witnessed": d_found, "candidate": dist.candidate.to_spec()}
    if p is not None:
        extra["p"] = p
    if k is not None:
        extra["k"] = k
    rep, rhs_of, lhs, ms = _thm1_core(inequality, L, K, d_found, m, f, quad, [], extra, cont)
    # re-evaluate the inequality itself at the requested d
    rhs = rhs_of(ms.estimate, d)
    d_min = _smallest_d(lhs, rhs_of, ms.estimate, d)
    rep.rhs, rep.ratio, rep.margin_sigma = rhs, _ratio(lhs, rhs), _margin(lhs, rhs)
    rep.verdict = decide(lhs, rhs)
    rep.parameters["d"] = d
    rep.trace["smallest_d"] = d_min
    if m == 1 and d_min is not None:
        rep.trace["D_certificate"] = d_min * n / (n - 1) * c_nm(n, 1)
    rep.warnings = warnings
    return rep


def verify_cor_kint(L, k, m, f, quad=QuadratureSpec(), d=None, candidates=None, budget=4):
    """The k-intersection-body form of :func:`verify_main_lp`."""
    if not 1 <= k < L.dim:
        raise PreconditionError("k must satisfy 1 <= k < n")
    rep = verify_main_lp(L, m, f, quad, d, candidates, budget, inequality=COR_KINT, k=k)
    return rep


def _lp_exponent(L):
    tags = [t for t in classify(L) if t.kind == SUBSPACE_LP_POS]
    if not tags or not tags[0].param > 2:
        raise PreconditionError("body is not tagged SubspaceLpPos(p) with p > 2")
    return float(tags[0].param)


def _ball_witness(L):
    """Witness of the distance from an l_p body (or its linear image) to B_2^n."""
    n = L.dim
    if isinstance(L, LpBall):
        return geometric_distance(L, EuclideanBall(n)), np.eye(n)
    if isinstance(L, LinearImage) and isinstance(L.inner, LpBall):
        T = np.array(L.matrix)
        return geometric_distance(L, LinearImage(EuclideanBall(n), T)), T
    r = bm_distance_upper(L, EuclideanBall(n), budget=4)
    return r, r.witness_map


def verify_p_gt_2(L, m, f, quad=QuadratureSpec()):
    """``mu(L) <= n^(m/2 - m/p) n/(n-m) c_{n,m} max_H mu(L ∩ H) |L|^(m/n)`` for subspaces of L_p, p > 2."""
    p = _lp_exponent(L)
    n = L.dim
    if not 1 <= m <= n - 1:
        raise PreconditionError("codimension out of range")
    d = lewis_bound(n, p)
    dist, T = _ball_witness(L)
    K = LinearImage(EuclideanBall(n), dist.witness_scale * T)
    cont = containment_report(L, K, dist.value)
    cont["witnessed_distance"] = dist.value
    cont["within_lewis_bound"] = dist.value <= d * (1 + CONTAINMENT_RTOL)
    extra = {"p": "inf" if math.isinf(p) else p, "lewis_bound": d}
    rep, *_ = _thm1_core(P_GT_2, L, K, d, m, f, quad, [], extra, cont)
    return rep


@dataclass
class StabilityInput:
    """Body ``K`` with ``f = 1 + g`` (``g >= 0``) and codimension ``m``."""

    K: object
    g: object
    m: int
    epsilon: Estimate = None


def verify_stability(inp, quad=QuadratureSpec()):
    """``int_K f <= |K| + n/(n-m) c_{n,m} |K|^(m/n) epsilon`` for ``f = 1 + g``.

    ``epsilon`` is estimated as ``max_H int_{K ∩ H} g``, which equals
    ``max_H (int_{K ∩ H} f - |K ∩ H|)``.
    """
    K, g, m = inp.K, inp.g, inp.m
    n = K.dim
    if not 1 <= m <= n - 1:
        raise PreconditionError("codimension out of range")
    warnings = []
    if GeneralizedMIntersection(m) not in classify(K):
        warnings.append(f"K is not tagged GeneralizedMIntersection({m})")
    vol = volume(K, quad)
    lhs = vol + measure_of_body(K, g, quad)
    factor = _slicing_factor(n, m, vol)

    def rhs_of(e):
        return vol + e * factor

    ms = _max_with_retry(K, g, m, quad, rhs_of, lhs)
    inp.epsilon = ms.estimate
    rhs = rhs_of(ms.estimate)
    return _report(STABILITY, lhs, rhs, ms, _params(K, m, g), warnings,
                   {"epsilon": ms.estimate.to_dict()},
                   force=INCONCLUSIVE if warnings else None)


# --------------------------------------------------------------------------
# batches

VERIFIERS = {
    "hyper": verify_hyper,
    "hyper-int": verify_hyper_int,
    "arbmeas": verify_arbmeas,
    "sqrtn2": verify_sqrtn2,
    "thm1": verify_thm1,
    "main-lp": verify_main_lp,
    "cor-kint": verify_cor_kint,
    "p-gt-2": verify_p_gt_2,
    "stability": lambda K, g, m, quad: verify_stability(StabilityInput(K, g, m), quad),
}

IDS = {
    "hyper": HYPER, "hyper-int": HYPER_INT, "arbmeas": ARBMEAS, "sqrtn2": SQRTN2,
    "thm1": THM1, "main-lp": MAIN_LP, "cor-kint": COR_KINT, "p-gt-2": P_GT_2,
    "stability": STABILITY,
}


@dataclass
class PlanEntry:
    """One verifier call: ``VERIFIERS[inequality](**kwargs, quad=...)``."""

    inequality: str
    kwargs: dict
    seed: int = None


def derive_seed(base, index):
    ss = np.random.SeedSequence(int(base), spawn_key=(STREAM_SWEEP, int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_entry(entry, quad):
    fn = VERIFIERS.get(entry.inequality)
    if fn is None:
        raise PreconditionError(f"unknown inequality {entry.inequality!r}")
    t0 = time.perf_counter()
    rep = fn(**entry.kwargs, quad=quad)
    rep.metadata["wall_ms"] = round(1000.0 * (time.perf_counter() - t0), 3)
    rep.metadata["seed"] = quad.seed
    return rep


def _error_report(entry, exc, seed):
    body = entry.kwargs.get("K") or entry.kwargs.get("L")
    params = {"error": f"{type(exc).__name__}: {exc}"}
    if body is not None:
        params.update(_params(body, entry.kwargs.get("m", 1)))
    return InequalityReport(IDS.get(entry.inequality, entry.inequality), None, None, math.nan, math.nan,
                            None, params, ERROR, [params["error"]], {}, {"seed": seed, "wall_ms": 0.0})


def sweep(plan, quad=QuadratureSpec()):
    """Run every plan entry; failures and errors never abort the batch.

    Entry ``i`` runs with its own seed, or ``derive_seed(quad.seed, i)``;
    reports come back in plan order.
    """
    plan = list(plan)

    def one(item):
        i, entry = item
        seed = entry.seed if entry.seed is not None else derive_seed(quad.seed, i)
        q = quad.replace(seed=seed)
        try:
            return run_entry(entry, q)
        except (ValueError, ArithmeticError) as exc:
            return _error_report(entry, exc, seed)

    return pmap(one, list(enumerate(plan)))
