import math

import numpy as np
import pytest

from starslice.bodies import Ellipsoid, EuclideanBall, LinearImage, LpBall
from starslice.harness import (
    EXPLORATORY, FAIL, INCONCLUSIVE, PASS, ContainmentError, PlanEntry, PreconditionError,
    StabilityInput, _smallest_d, decide, sweep, verify_arbmeas, verify_cor_kint, verify_hyper,
    verify_hyper_int, verify_main_lp, verify_p_gt_2, verify_sqrtn2, verify_stability, verify_thm1, volume_step_check,
)
from starslice.quadrature import Constant, Estimate, Gaussian, GeneralizedGaussian, QuadratureSpec

Q = QuadratureSpec()
FAST = QuadratureSpec(subspace_samples=40, refine_steps=15)


# --- verdict rule


def test_decide_pass_within_four_sigma():
    assert decide(Estimate(1.0, 0.1, 10), Estimate(0.65, 0.0, 0)) == PASS
    assert decide(Estimate(1.0, 0.0, 0), Estimate(1.0, 0.0, 0)) == PASS


def test_decide_fail_needs_confidence():
    assert decide(Estimate(2.0, 0.01, 10), Estimate(1.0, 0.01, 10)) == FAIL
    assert decide(Estimate(2.0, 0.2, 10), Estimate(1.0, 0.001, 10)) == INCONCLUSIVE


def test_decide_float_slack_for_exact_equality():
    assert decide(Estimate(1.0 + 1e-15, 0.0, 0), Estimate(1.0, 0.0, 0)) == PASS


# --- individual inequalities


@pytest.mark.parametrize("n", [3, 5, 8])
def test_ball_is_equality_case(n):
    r = verify_hyper_int(EuclideanBall(n), Q)
    assert r.verdict == PASS
    assert abs(r.ratio - 1.0) <= 4 * r.sigma / r.rhs.value + 1e-12


def test_hyper_int_scale_invariance():
    a = verify_hyper_int(LpBall(3, 2.0), FAST)
    b = verify_hyper_int(LpBall(3, 2.0, 10.0), FAST)
    assert a.ratio == pytest.approx(b.ratio, rel=1e-12)


def test_hyper_int_scale_invariance_through_linear_image():
    a = verify_hyper_int(LpBall(3, 1.0), FAST)
    b = verify_hyper_int(LinearImage(LpBall(3, 1.0), 3.0 * np.eye(3)), FAST)
    assert abs(a.ratio - b.ratio) <= 4 * (a.sigma / a.rhs.value + b.sigma / b.rhs.value) + 1e-12


def test_hyper_int_class_warning():
    r = verify_hyper_int(LpBall(5, 4.0), FAST)
    assert r.verdict == INCONCLUSIVE
    assert r.warnings


def test_implication_chain_sqrtn_factor_exact():
    K, f = LpBall(4, 1.5), GeneralizedGaussian(1.0, 1.0)
    a = verify_arbmeas(K, f, FAST)
    b = verify_sqrtn2(K, f, FAST)
    assert b.rhs.value == a.rhs.value * math.sqrt(4)
    assert a.lhs.value == b.lhs.value
    assert a.verdict == PASS and b.verdict == PASS


def test_arbmeas_constant_density_dominates_hyper_int():
    K = LpBall(3, 1.0)
    h = verify_hyper_int(K, FAST)
    a = verify_arbmeas(K, Constant(1.0), FAST)
    # |K| / |K|^{1/n} = |K|^{(n-1)/n} and rhs gains n/(n-1)
    assert a.ratio == pytest.approx(h.ratio * 2 / 3, rel=1e-12)


def test_sqrtn2_convexity_gate():
    r = verify_sqrtn2(LpBall(3, 0.5), Constant(1.0), FAST)
    assert r.verdict == INCONCLUSIVE and r.warnings


def test_hyper_is_exploratory():
    assert verify_hyper(LpBall(3, 4.0), Constant(1.0), FAST).verdict == EXPLORATORY


def test_thm1_trivial_d_equals_one():
    r = verify_thm1(EuclideanBall(3), EuclideanBall(3), 1.0, 2, Gaussian(1.0), FAST)
    assert r.verdict == PASS
    assert r.trace["volume_step"]["equal_within_4sigma"]


def test_thm1_containment_violation_raises():
    with pytest.raises(ContainmentError):
        verify_thm1(LpBall(3, 1.0), LpBall(3, 1.0, 3.0), 2.0, 1, Constant(1.0), FAST)


def test_volume_step_equality_for_homothety():
    K = LpBall(3, 1.5)
    d = 1.7
    chk = volume_step_check(K, LinearImage(K, np.eye(3) / d), d, Q)
    assert chk["holds"] and chk["equal_within_4sigma"]


def test_thm1_rhs_strictly_increasing_in_d():
    L = LpBall(3, 1.0)
    rhs = [verify_thm1(L, LinearImage(L, d * np.eye(3)), d, 1, Constant(1.0), FAST).rhs.value
           for d in (1.0, 1.5, 2.0)]
    assert rhs[0] < rhs[1] < rhs[2]


def test_main_lp_self_candidate():
    r = verify_main_lp(LpBall(3, 1.0), 1, Constant(1.0), FAST)
    assert r.verdict == PASS
    assert r.parameters["d_witnessed"] == pytest.approx(1.0)
    assert r.trace["smallest_d"] == 1.0
    assert r.trace["D_certificate"] == pytest.approx(1.5 * 0.8271339878658666, rel=1e-12)


def test_bisection_brackets_smallest_d():
    lhs = Estimate(1.5, 0.0, 0)
    eps = Estimate(1.0, 0.0, 0)

    def rhs_of(e, d):
        return e.scaled(d)

    d_min = _smallest_d(lhs, rhs_of, eps, 4.0)
    assert decide(lhs, rhs_of(eps, d_min)) == PASS
    assert decide(lhs, rhs_of(eps, d_min * (1 - 1e-3))) != PASS
    assert d_min == pytest.approx(1.5, rel=1e-8)
    assert _smallest_d(lhs, rhs_of, eps, 1.2) is None


def test_main_lp_user_d_and_smallest_d():
    L = LpBall(3, 4.0)
    r = verify_main_lp(L, 1, Gaussian(0.3), FAST, d=2.0, candidates=[EuclideanBall(3)])
    assert r.verdict == PASS and r.parameters["d"] == 2.0
    assert r.parameters["d_witnessed"] == pytest.approx(3 ** 0.25, rel=1e-6)
    assert r.trace["smallest_d"] == 1.0


def test_main_lp_warns_when_d_below_witness():
    r = verify_main_lp(LpBall(3, 4.0), 1, Constant(1.0), FAST, d=1.1, candidates=[EuclideanBall(3)])
    assert any("not witnessed" in w for w in r.warnings)


def test_cor_kint_reports_k():
    r = verify_cor_kint(LpBall(4, 1.0), 2, 2, Constant(1.0), FAST)
    assert r.inequality_id == "COR_KINT" and r.parameters["k"] == 2 and r.verdict == PASS


def test_p_gt_2_requires_lp_tag():
    with pytest.raises(PreconditionError):
        verify_p_gt_2(Ellipsoid.from_axes([1.0, 2.0, 3.0]), 1, Constant(1.0), FAST)


def test_p_gt_2_chords():
    r = verify_p_gt_2(LpBall(3, 4.0), 2, Constant(1.0), FAST)
    assert r.verdict == PASS
    assert r.trace["containment"]["within_lewis_bound"]


def test_p_gt_2_linear_image():
    T = np.array([[1.0, 0.3, 0.0], [0.0, 1.5, 0.0], [0.0, 0.2, 0.8]])
    r = verify_p_gt_2(LinearImage(LpBall(3, 4.0), T), 1, Constant(1.0), FAST)
    assert r.verdict == PASS
    assert r.trace["containment"]["holds"]


def test_stability_gaussian_and_zero():
    r = verify_stability(StabilityInput(EuclideanBall(3), Gaussian(1.0), 1), Q)
    assert r.verdict == PASS
    z = verify_stability(StabilityInput(EuclideanBall(3), Constant(0.0), 1), Q)
    assert abs(z.lhs.value - z.rhs.value) <= 4 * z.sigma + 1e-12


def test_stability_records_epsilon():
    inp = StabilityInput(LpBall(4, 1.0), Constant(0.5), 2)
    r = verify_stability(inp, FAST)
    assert r.verdict == PASS
    assert inp.epsilon is not None and inp.epsilon.value > 0


# --- sweeps


def test_empty_sweep():
    assert sweep([], FAST) == []


def test_sweep_isolates_errors_and_keeps_order():
    plan = [
        PlanEntry("hyper-int", {"K": LpBall(3, 1.0)}),
        PlanEntry("p-gt-2", {"L": EuclideanBall(3), "m": 1, "f": Constant(1.0)}),
        PlanEntry("hyper-int", {"K": EuclideanBall(4)}),
    ]
    out = sweep(plan, FAST)
    assert [r.verdict for r in out] == [PASS, "Error", PASS]
    assert "SubspaceLpPos" in out[1].warnings[0]


def test_sweep_seeds_are_per_entry_and_reproducible():
    plan = [PlanEntry("hyper-int", {"K": LpBall(4, 1.5)}) for _ in range(2)]
    a, b = sweep(plan, FAST), sweep(plan, FAST)
    assert a[0].metadata["seed"] != a[1].metadata["seed"]
    assert [r.to_dict(compare=True) for r in a] == [r.to_dict(compare=True) for r in b]
