import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noiseball.bounds import (BoundsError, InapplicableError,
                              asymptotic_limits, closed_form_envelopes,
                              constants_from_dict, derive_constants, h1, h2,
                              lower_step, one_step_bounds,
                              propagated_envelopes, refined_asymptotics,
                              theorem32_ledger, theorem34_classify, upper_step,
                              z0_bisect, z0_root)
from noiseball.constants import problem_constants
from noiseball.engine import exact_error_quadratic
from noiseball.problems import quartic_problem, toy_two_component


def toy_constants(eta=0.1):
    return derive_constants(problem_constants(toy_two_component()), eta)


def test_admissibility_flags():
    c = toy_constants(0.1)
    assert c.flags.one_step and c.flags.strongly_convex
    assert c.flags.asymptotic_floor and c.flags.small_eta
    c = toy_constants(0.6)  # above lambda_min / (Lambda^2 + lambda_max_0^2) = 0.5
    assert c.flags.one_step
    assert not c.flags.strongly_convex
    assert not c.flags.asymptotic_floor
    c = derive_constants(problem_constants(quartic_problem()), 0.001)
    assert c.flags.strongly_convex is None  # non-convex: no upper-side theory


def test_eta_validation():
    with pytest.raises(BoundsError):
        toy_constants(0.0)


def test_one_step_map_examples():
    c = toy_constants()
    # at R = 0.04: lower 0.8*0.04 - 0.002*2*0.2... = 0.038, upper 0.0464
    assert lower_step(0.04, c) == pytest.approx(0.038)
    assert upper_step(0.04, c) == pytest.approx(0.0464)
    assert c.alpha == pytest.approx(0.81)
    with pytest.raises(BoundsError):
        lower_step(-1.0, c)


def test_upper_step_needs_strong_convexity():
    c = derive_constants(problem_constants(quartic_problem()), 0.001)
    with pytest.raises(InapplicableError):
        upper_step(0.1, c)


def test_z0_closed_form_vs_bisection():
    for eta in (0.01, 0.1, 0.3):
        c = toy_constants(eta)
        assert c.z0 == pytest.approx(z0_bisect(c), abs=1e-11)
        assert h1(c.z0, c) == pytest.approx(0.0, abs=1e-12)


def test_z0_toy_value():
    c = toy_constants(0.1)
    assert c.z0 == pytest.approx(0.17912878474779, abs=1e-12)
    assert c.z0 ** 2 == pytest.approx(0.032087, abs=1e-6)
    assert c.z_star == pytest.approx(0.0125)


def test_h2_is_lower_step_in_sqrt():
    c = toy_constants()
    for R in (0.0, 0.01, 0.25, 2.0):
        assert h2(math.sqrt(R), c) == pytest.approx(lower_step(R, c))


def test_degenerate_noise_free_case():
    # D0 = 0: both maps are pure contractions and z0 = 0
    assert z0_root(0.1, 1.0, 0.0, 1.0) == 0.0
    spec = {"eta": 0.1, "D0": 0.0, "Lambda": 1.0,
            "lambda_max_0": 1.0, "lambda_min": 1.0}
    c = constants_from_dict(spec)
    assert lower_step(1.0, c) == pytest.approx(0.8)
    assert upper_step(1.0, c) == pytest.approx(0.81)


@given(st.floats(0.01, 5.0), st.floats(0.01, 5.0), st.floats(0.001, 0.4))
@settings(max_examples=80, deadline=None)
def test_z0_monotone_in_noise_level(D0, lam0, eta):
    # more gradient noise at the optimum pushes the floor up
    lo = z0_root(eta, lam0, D0, lam0)
    hi = z0_root(eta, lam0, 2.0 * D0, lam0)
    assert hi >= lo - 1e-12
    # a larger smoothness constant shrinks the floor
    assert z0_root(eta, lam0, D0, 2.0 * lam0) <= lo + 1e-12


def test_ledger_values():
    c = theorem32_ledger(toy_constants(0.1), 4.0)
    assert c.C0 == pytest.approx(0.288007, abs=1e-6)
    assert c.C1 == pytest.approx(4.0)
    assert c.C2 == pytest.approx(2.635523, abs=1e-6)
    assert c.C3 == pytest.approx(-1.503747, abs=1e-6)
    assert c.C4 == pytest.approx(6.635523, abs=1e-6)
    assert c.K0 == 22


def test_ledger_gating():
    with pytest.raises(BoundsError):
        theorem32_ledger(toy_constants(0.6), 4.0)
    with pytest.raises(BoundsError):
        theorem32_ledger(toy_constants(0.1), -1.0)
    c = derive_constants(problem_constants(quartic_problem()), 0.001)
    with pytest.raises(BoundsError):
        theorem32_ledger(c, 4.0)


def test_asymptotic_limits_need_ledger():
    with pytest.raises(BoundsError):
        asymptotic_limits(toy_constants(0.1))


def test_limits_ordering_chain():
    # liminf floor <= exact limit <= refined limsup <= ledger limsup
    c = theorem32_ledger(toy_constants(0.1), 4.0)
    exact_limit = 0.1 / (2.0 - 0.1)  # fixed point of the exact toy recursion
    liminf_refined, limsup_refined = refined_asymptotics(c)
    liminf_ledger, limsup_ledger = asymptotic_limits(c)
    assert liminf_refined == pytest.approx(c.z0 ** 2)
    assert c.z0 ** 2 <= exact_limit <= limsup_refined <= limsup_ledger
    assert limsup_refined == pytest.approx(0.082948, abs=1e-6)
    assert limsup_ledger == pytest.approx(0.138378, abs=1e-6)
    assert liminf_ledger <= c.z0 ** 2


def test_refined_asymptotics_gating():
    c = derive_constants(problem_constants(quartic_problem()), 0.069)
    with pytest.raises(InapplicableError):
        refined_asymptotics(c)


def test_propagated_envelopes_bracket_exact_series():
    toy = toy_two_component()
    c = toy_constants(0.1)
    for theta0 in (0.0, 2.0):
        R0 = theta0 ** 2
        exact = exact_error_quadratic(toy, 0.1, np.array([theta0]), 300).r_hat
        env = propagated_envelopes(c, R0, 300)
        assert np.all(exact >= env.lower - 1e-10)
        assert np.all(exact <= env.upper + 1e-10)
        assert env.lower[0] == env.upper[0] == R0


def test_propagated_first_step_from_zero():
    # from R_0 = 0 both sides give exactly eta^2 D0^2
    env = propagated_envelopes(toy_constants(0.1), 0.0, 3)
    assert env.lower[1] == pytest.approx(0.01)
    assert env.upper[1] == pytest.approx(0.01)


def test_propagated_no_upper_without_convexity():
    c = derive_constants(problem_constants(quartic_problem()), 1.0 / 216.0)
    env = propagated_envelopes(c, 9.0, 50)
    assert np.all(np.isinf(env.upper[1:]))
    assert np.all(env.lower >= 0.0)
    # the floor eventually settles near z0^2, never above it by much
    assert env.lower[-1] <= c.z0 ** 2 + 1e-12


def test_propagated_gating():
    with pytest.raises(BoundsError):
        propagated_envelopes(toy_constants(1.5), 1.0, 10)


def test_closed_form_envelopes_bracket_exact_series():
    toy = toy_two_component()
    c = theorem32_ledger(toy_constants(0.1), 4.0)
    exact = exact_error_quadratic(toy, 0.1, np.array([2.0]), 500).r_hat
    env = closed_form_envelopes(c, 500)
    assert np.all(exact >= env.lower - 1e-10)
    assert np.all(exact <= env.upper + 1e-10)
    # after the burn-in the envelope levels off at the asymptotic bracket
    liminf, limsup = asymptotic_limits(c)
    assert env.lower[-1] == pytest.approx(liminf)
    assert env.upper[-1] == pytest.approx(c.alpha ** (500 - c.K0) * c.C4 * c.eta
                                          + limsup)
    assert env.meta["K0"] == c.K0


def test_one_step_anchored_on_exact_series():
    toy = toy_two_component()
    c = toy_constants(0.1)
    exact = exact_error_quadratic(toy, 0.1, np.array([2.0]), 200).r_hat
    env = one_step_bounds(exact, c)
    assert env.lower[0] == env.upper[0] == exact[0]
    assert np.all(exact[1:] >= env.lower[1:] - 1e-10)
    assert np.all(exact[1:] <= env.upper[1:] + 1e-10)
    with pytest.raises(BoundsError):
        one_step_bounds(np.array([]), c)


def test_threshold_classification_toy():
    toy = toy_two_component()
    c = toy_constants(0.1)
    exact = exact_error_quadratic(toy, 0.1, np.zeros(1), 500).r_hat
    rep = theorem34_classify(exact, c)
    assert rep.all_pass
    assert rep.first_crossing == 5
    assert rep.first_violation is None


def test_threshold_classification_above_start():
    toy = toy_two_component()
    c = toy_constants(0.1)
    exact = exact_error_quadratic(toy, 0.1, np.array([2.0]), 200).r_hat
    rep = theorem34_classify(exact, c)
    assert rep.all_pass
    assert rep.first_crossing == 0  # starts above the floor and stays there


def test_threshold_classification_detects_violations():
    c = toy_constants(0.1)
    fake = np.array([0.0, 0.02, 0.01, 0.005])  # decreases below z0^2
    rep = theorem34_classify(fake, c)
    assert not rep.increasing_below
    assert rep.first_violation == 1


def test_threshold_gating_small_eta():
    c = derive_constants(problem_constants(quartic_problem()), 0.069)
    with pytest.raises(InapplicableError):
        theorem34_classify(np.zeros(5), c)


def test_constants_round_trip_via_dict():
    c = theorem32_ledger(toy_constants(0.1), 4.0)
    back = constants_from_dict(c.to_dict())
    assert back.z0 == pytest.approx(c.z0, abs=1e-15)
    assert back.C4 == pytest.approx(c.C4, abs=1e-15)
    assert back.K0 == c.K0
    with pytest.raises(BoundsError):
        constants_from_dict({"eta": "x"})
