import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kannanlab.fixpoint import (BallSpec, ConvergenceError, SelfMapViolation, SolveConfig,
                                check_mth_invariant, cross_validate, picard_fixed_point,
                                solve_implicit_direct, solve_implicit_nested)
from kannanlab.funcspace import GridFunction
from kannanlab.kannan import build_example_2_3

TOL = 1e-10
CFG = SolveConfig(tol=TOL)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(tol=0.0)
    with pytest.raises(ValueError):
        SolveConfig(max_iter=0)


def test_picard_scalar_example():
    u, rep = picard_fixed_point(lambda u: (u + 0.4) / 4, 0.0, CFG)
    assert rep.converged
    assert u == pytest.approx(0.4 / 3, abs=TOL)
    assert rep.final_residual <= TOL * (1 + rep.observed_ratio)
    assert len(rep.step_norms) == rep.iterations


def test_picard_already_fixed():
    u, rep = picard_fixed_point(lambda u: (u + 0.4) / 4, 0.4 / 3, CFG)
    assert rep.iterations == 1
    assert rep.step_norms[0] <= TOL


@pytest.mark.parametrize("v", [0.0, 0.25, 0.4, 0.9, 1.0])
@pytest.mark.parametrize("u0", [0.0, 0.5, 1.0])
def test_picard_rate_on_example_inner_maps(v, u0):
    T = build_example_2_3()
    u, rep = picard_fixed_point(lambda w: T(w, v), u0, CFG, kannan_k=1 / 3)
    assert rep.converged
    assert rep.rate_ok
    assert rep.observed_ratio <= 0.5 + 1e-6
    assert u == pytest.approx(v / 3, abs=TOL)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_inner_fixed_point_unique(v, a, b):
    T = build_example_2_3()
    ua, ra = picard_fixed_point(lambda w: T(w, v), a, CFG)
    ub, rb = picard_fixed_point(lambda w: T(w, v), b, CFG)
    assert ra.converged and rb.converged
    assert abs(ua - ub) <= 2 * TOL


def test_rate_warning_logged(caplog):
    # a plain contraction with factor 0.9 beats the claimed Kannan rate
    with caplog.at_level("WARNING"):
        _, rep = picard_fixed_point(lambda u: 0.9 * u, 1.0, CFG, kannan_k=0.2)
    assert not rep.rate_ok
    assert "rate bound" in caplog.text


def test_max_iter_is_a_report_not_an_exception():
    _, rep = picard_fixed_point(lambda u: 0.5 * u, 1.0, SolveConfig(tol=TOL, max_iter=5))
    assert not rep.converged
    assert rep.iterations == 5
    assert "max_iter" in rep.message


def test_self_map_violation():
    ball = BallSpec(0.0, 1.0)
    with pytest.raises(SelfMapViolation, match="self-map violation"):
        picard_fixed_point(lambda u: 2 * u + 0.1, 0.5, CFG, ball=ball)
    with pytest.raises(SelfMapViolation):
        picard_fixed_point(lambda u: u, 3.0, CFG, ball=ball)


def test_stall_guard():
    _, rep = picard_fixed_point(lambda u: -u, 1.0, SolveConfig(tol=TOL, stall_limit=50))
    assert not rep.converged
    assert rep.iterations == 51
    assert "did not decrease" in rep.message


def test_step_ratio_ignores_noise_floor():
    # steps below rounding level must not pollute the observed ratio
    _, rep = picard_fixed_point(lambda u: (u + 0.4) / 4, 0.0, SolveConfig(tol=1e-300, max_iter=60))
    # steps a few ulps above the floor carry ~1e-3 relative rounding
    assert rep.observed_ratio <= 0.26


@pytest.mark.parametrize("solver", [solve_implicit_nested, solve_implicit_direct])
def test_example_identity_C(solver):
    T = build_example_2_3()
    u, rep = solver(T, lambda u: u, 0.7, CFG)
    assert rep.converged
    assert abs(u) <= TOL
    assert abs(T(u, u) - u) <= TOL


@pytest.mark.parametrize("seed", range(5))
def test_example_identity_C_random_starts_agree(seed):
    rng = np.random.default_rng(seed)
    u0 = float(rng.uniform())
    chk = cross_validate(build_example_2_3(), lambda u: u, u0, CFG)
    assert chk.agree
    assert abs(chk.u_nested) <= TOL and abs(chk.u_direct) <= TOL


def test_u_independent_map_fixed_point_of_composition():
    # T(u, v) = g(v); the solution is the fixed point of g o C
    g = lambda v: 0.5 * math.cos(v)
    C = lambda u: 0.5 * u
    u, rep = solve_implicit_nested(lambda u, v: g(v), C, 0.0, CFG)
    assert rep.converged
    assert u == pytest.approx(g(C(u)), abs=TOL)
    # every inner solve settles after at most 2 Picard steps
    assert rep.inner_iterations <= 2 * rep.iterations
    # the outer loop is a plain iteration of g o C, so it needs more than 2 steps in general
    assert rep.iterations > 2


def test_u_independent_map_with_constant_C():
    u, rep = solve_implicit_nested(lambda u, v: v + 1.0, lambda u: 0.25, 0.0, CFG)
    assert rep.converged and rep.iterations <= 2
    assert u == 1.25


def test_constant_map_direct():
    u, rep = solve_implicit_direct(lambda u, v: 0.3, lambda u: u, 0.9, CFG)
    assert u == 0.3
    # one step lands on c; the next confirms it
    assert rep.iterations == 2 and rep.step_norms[-1] == 0.0


def test_nested_propagates_inner_failure():
    cfg = SolveConfig(tol=TOL, max_iter=3)
    with pytest.raises(ConvergenceError, match="inner"):
        solve_implicit_nested(lambda u, v: 0.9 * u + v, lambda u: 0.1, 0.0, cfg)


def test_grid_function_solvers_agree():
    n = 101
    t = GridFunction.from_callable(lambda s: s, n)
    T = lambda u, v: u / 4 + v
    C = lambda u: 0.2 * u + t * 0.1
    chk = cross_validate(T, C, GridFunction.zeros(n), CFG)
    assert chk.agree
    u = chk.u_nested
    # u = u/4 + 0.2 u + 0.1 t  =>  u = 0.1 t / 0.55
    assert np.max(np.abs(u.values - 0.1 * t.values / 0.55)) <= 10 * TOL


def test_report_json():
    _, rep = picard_fixed_point(lambda u: u / 2, 1.0, CFG, kannan_k=0.4)
    d = json.loads(rep.to_json())
    for key in ("iterations", "converged", "final_residual", "observed_ratio", "step_norms"):
        assert key in d
    assert d["iterations"] == len(d["step_norms"])


# invariance checker

@pytest.mark.parametrize("center,radius", [(0.0, 1.0), (2.0, 0.5), (-3.0, 4.0)])
@pytest.mark.parametrize("q", [0.0, 0.1, 0.25, 0.49])
def test_invariant_linear_scaling(center, radius, q):
    res = check_mth_invariant(lambda x: q * x, BallSpec(center, radius), q, 1, 64)
    ok, wit = res
    assert ok and wit is None
    assert res.checked == 64


def test_invariant_linear_scaling_vector_ball():
    ball = BallSpec(np.array([1.0, -2.0, 0.5]), 0.7)
    ok, _ = check_mth_invariant(lambda x: 0.3 * x, ball, 0.3, 1, 100, seed=4)
    assert ok


@pytest.mark.parametrize("center,radius", [(0.0, 1.0), (0.5, 0.5), (-0.2, 0.3)])
@pytest.mark.parametrize("q,m", [(0.0, 1), (0.3, 2), (0.45, 5)])
def test_invariant_zero_map_origin_ball(center, radius, q, m):
    ok, wit = check_mth_invariant(lambda x: 0.0 * x, BallSpec(center, radius), q, m, 32)
    assert ok and wit is None


def test_invariant_zero_map_fails_off_origin():
    ok, wit = check_mth_invariant(lambda x: 0.0 * x, BallSpec(2.0, 0.5), 0.3, 1, 8)
    assert not ok and wit == 2.0


def test_invariant_half_map_fails_with_witness():
    res = check_mth_invariant(lambda x: x / 2, BallSpec(1.0, 0.1), 0.25, 1, 16)
    ok, wit = res
    assert not ok
    assert wit == 1.0
    assert res.factor == 0.25


def test_invariant_center_scaling():
    # B(c, q r) around c: the zero map fails, a map pulling towards c passes
    ball = BallSpec(1.0, 0.4)
    ok, _ = check_mth_invariant(lambda x: 0.0 * x, ball, 0.25, 1, 16, scaling="center")
    assert not ok
    ok, _ = check_mth_invariant(lambda x: 1.0 + 0.25 * (x - 1.0), ball, 0.25, 1, 16,
                                scaling="center")
    assert ok


def test_invariant_grid_function_ball():
    c = GridFunction.from_callable(np.sin, 51)
    ok, _ = check_mth_invariant(lambda x: 0.2 * x, BallSpec(c, 0.5), 0.2, 1, 20)
    assert ok


def test_invariant_argument_checks():
    ball = BallSpec(0.0, 1.0)
    with pytest.raises(ValueError):
        check_mth_invariant(lambda x: x, ball, 0.5, 1, 4)
    with pytest.raises(ValueError):
        check_mth_invariant(lambda x: x, ball, 0.2, 0, 4)
    with pytest.raises(ValueError):
        check_mth_invariant(lambda x: x, ball, 0.2, 1, 4, scaling="other")
    with pytest.raises(ValueError):
        BallSpec(0.0, 0.0)
