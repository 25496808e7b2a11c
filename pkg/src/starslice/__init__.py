"""Numerical toolkit for slicing inequalities on star bodies.

Star bodies and sections (:mod:`.bodies`), spherical quadrature
(:mod:`.quadrature`), the spherical Radon transform (:mod:`.radon`),
closed-form constants (:mod:`.constants`), geometric and Banach-Mazur
distances (:mod:`.distance`) and the inequality harness (:mod:`.harness`).
"""
__version__ = "0.1.0"

from .bodies import (
    DimensionError, Ellipsoid, EuclideanBall, LinearImage, LpBall, RadialGrid, SectionBody,
    StarBody, Subspace, minkowski, radial, subspace_restrict,
)
from .constants import ball_volume, c_nm, classify, lewis_bound
from .distance import bm_distance_upper, distance_to_class, geometric_distance
from .harness import (
    InequalityReport, StabilityInput, sweep, verify_arbmeas, verify_cor_kint, verify_hyper,
    verify_hyper_int, verify_main_lp, verify_p_gt_2, verify_sqrtn2, verify_stability, verify_thm1,
)
from .quadrature import (
    Constant, Estimate, Gaussian, GeneralizedGaussian, Product, QuadratureSpec, max_section,
    measure_of_body, measure_of_section, section_volume, volume,
)
from .radon import SphericalFunction, intersection_body_of, radon_transform

__all__ = [
    "DimensionError", "Ellipsoid", "EuclideanBall", "LinearImage", "LpBall", "RadialGrid",
    "SectionBody", "StarBody", "Subspace", "minkowski", "radial", "subspace_restrict",
    "ball_volume", "c_nm", "classify", "lewis_bound",
    "bm_distance_upper", "distance_to_class", "geometric_distance",
    "InequalityReport", "StabilityInput", "sweep", "verify_arbmeas", "verify_cor_kint",
    "verify_hyper", "verify_hyper_int", "verify_main_lp", "verify_p_gt_2", "verify_sqrtn2",
    "verify_stability", "verify_thm1",
    "Constant", "Estimate", "Gaussian", "GeneralizedGaussian", "Product", "QuadratureSpec",
    "max_section", "measure_of_body", "measure_of_section", "section_volume", "volume",
    "SphericalFunction", "intersection_body_of", "radon_transform",
]
