"""Closed-form constants and the class-membership rule table."""
import math
from dataclasses import dataclass


def ball_volume(n):
    """Volume of the unit Euclidean ball in R^n, via log-Gamma."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0))


def sphere_area(k):
    """Surface measure of the unit sphere S^(k-1) in R^k (``k |B_2^k|``)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return k * ball_volume(k)


def c_nm(n, m):
    """``|B_2^n|^((n-m)/n) / |B_2^(n-m)|``; ``c_nm(n, 1)`` is the hyperplane constant."""
    if not 1 <= m <= n - 1:
        raise ValueError(f"codimension out of range: need 1 <= m <= n-1, got n={n}, m={m}")
    log_c = (n - m) / n * math.log(ball_volume(n)) - math.log(ball_volume(n - m))
    return math.exp(log_c)


def lewis_bound(n, p):
    """``n^(1/2 - 1/p)``, the Banach-Mazur bound to B_2^n for subspaces of L_p, p > 2."""
    p = float(p)
    if not p > 2:
        raise ValueError("the Lewis bound needs p > 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    exponent = 0.5 if math.isinf(p) else 0.5 - 1.0 / p
    return float(n) ** exponent


@dataclass(frozen=True)
class ClassTag:
    """A class label; ``param`` is m, k, q or p depending on ``kind``."""

    kind: str
    param: float = None

    def __str__(self):
        if self.param is None:
            return self.kind
        v = self.param
        v = "inf" if isinstance(v, float) and math.isinf(v) else (int(v) if float(v).is_integer() else v)
        return f"{self.kind}({v})"


INTERSECTION = "IntersectionBody"
GEN_M_INTERSECTION = "GeneralizedMIntersection"
K_INTERSECTION = "KIntersection"
SUBSPACE_LQ = "SubspaceLq"
SUBSPACE_LP_POS = "SubspaceLpPos"
CONVEX = "GeneralSymmetricConvex"
UNKNOWN = "Unknown"


def IntersectionBody():
    return ClassTag(INTERSECTION)


def GeneralizedMIntersection(m):
    return ClassTag(GEN_M_INTERSECTION, int(m))


def KIntersection(k):
    return ClassTag(K_INTERSECTION, int(k))


def SubspaceLq(q):
    return ClassTag(SUBSPACE_LQ, float(q))


def SubspaceLpPos(p):
    return ClassTag(SUBSPACE_LP_POS, float(p))


def GeneralSymmetricConvex():
    return ClassTag(CONVEX)


def Unknown():
    return ClassTag(UNKNOWN)


def _intersection_tags(n):
    tags = {IntersectionBody()}
    tags.update(GeneralizedMIntersection(m) for m in range(1, n))
    tags.update(KIntersection(k) for k in range(1, n))
    return tags


def classify(body):
    """Class tags of a built-in body, from a closed whitelist.

    =====================================  =======================================
    family                                 tags
    =====================================  =======================================
    ball, ellipsoid                        intersection family, SubspaceLq(2), convex
    lp, 0 < p <= 2                         intersection family, SubspaceLq(p)
                                           (+ convex when p >= 1)
    lp, p > 2                              SubspaceLpPos(p), convex
    linear image / section                 tags of the inner body
    radial grid from intersection_body_of  IntersectionBody, GeneralizedMIntersection
    radial grid from levy_body, p <= 2     intersection family, SubspaceLq(p)
    other radial grids                     Unknown
    =====================================  =======================================

    "intersection family" means IntersectionBody plus GeneralizedMIntersection(m)
    and KIntersection(m) for every 1 <= m <= n-1.
    """
    from .bodies import Ellipsoid, EuclideanBall, LinearImage, LpBall, RadialGrid, SectionBody

    n = body.dim
    if isinstance(body, (EuclideanBall, Ellipsoid)):
        return frozenset(_intersection_tags(n) | {SubspaceLq(2.0), GeneralSymmetricConvex()})
    if isinstance(body, LpBall):
        if body.p <= 2:
            tags = _intersection_tags(n) | {SubspaceLq(body.p)}
            if body.p >= 1:
                tags.add(GeneralSymmetricConvex())
            return frozenset(tags)
        return frozenset({SubspaceLpPos(body.p), GeneralSymmetricConvex()})
    if isinstance(body, LinearImage):
        return classify(body.inner)
    if isinstance(body, SectionBody):
        inner = classify(body.inner)
        keep = {t for t in inner if t.kind in (SUBSPACE_LQ, SUBSPACE_LP_POS, CONVEX)}
        if IntersectionBody() in inner:
            keep |= _intersection_tags(n)
        return frozenset(keep or {Unknown()})
    if isinstance(body, RadialGrid) and body.origin == "intersection_body":
        return frozenset({IntersectionBody()} | {GeneralizedMIntersection(m) for m in range(1, n)})
    if isinstance(body, RadialGrid) and str(body.origin).startswith("levy:"):
        p = float(body.origin.split(":", 1)[1])
        if 0 < p <= 2:
            return frozenset(_intersection_tags(n) | {SubspaceLq(p)})
    return frozenset({Unknown()})


def is_convex(body):
    return GeneralSymmetricConvex() in classify(body)
