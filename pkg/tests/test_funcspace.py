import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kannanlab.funcspace import (GridFunction, NormParams, fd_first_derivative_at_zero,
                                 fd_second_derivative, grid, sup_norm, weighted_sup_norm)

finite = st.floats(-1e3, 1e3, allow_nan=False)
gammas = st.floats(-5, 5, allow_nan=False)


def test_grid_endpoints():
    t = grid(11)
    assert t[0] == 0.0 and t[-1] == 1.0
    assert np.allclose(np.diff(t), 0.1)


def test_rejects_bad_values():
    with pytest.raises(ValueError, match="insufficient nodes"):
        GridFunction([1.0, 2.0])
    with pytest.raises(ValueError, match="finite"):
        GridFunction([0.0, np.nan, 1.0])
    with pytest.raises(ValueError, match="grid mismatch"):
        GridFunction.zeros(5) + GridFunction.zeros(7)


def test_immutable():
    u = GridFunction.constant(1.0, 5)
    with pytest.raises(ValueError):
        u.values[0] = 3.0


def test_norm_constant_unweighted():
    assert weighted_sup_norm(GridFunction.constant(1.0), NormParams(0.0)) == 1.0


def test_norm_weight_cancels_exponential():
    u = GridFunction.from_callable(np.exp)
    assert weighted_sup_norm(u, NormParams(1.0)) == pytest.approx(1.0, abs=1e-15)


def test_norm_of_identity_with_gamma_one():
    # t e^{-t} is increasing on [0, 1]; max at t = 1
    u = GridFunction.from_callable(lambda t: t)
    assert weighted_sup_norm(u, NormParams(1.0)) == pytest.approx(math.exp(-1.0), rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=5, max_size=5), st.lists(finite, min_size=5, max_size=5),
       finite, gammas)
def test_norm_axioms(a, b, c, gamma):
    u, w = GridFunction(a), GridFunction(b)
    n = lambda x: weighted_sup_norm(x, gamma)
    assert n(u) >= 0.0
    assert (n(u) == 0.0) == bool(np.all(u.values == 0.0))
    assert n(c * u) == pytest.approx(abs(c) * n(u), rel=1e-12, abs=1e-300)
    assert n(u + w) <= n(u) + n(w) + 1e-12 * (n(u) + n(w))


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=7, max_size=7), st.floats(0, 5))
def test_norm_equivalence(a, gamma):
    u = GridFunction(a)
    s = sup_norm(u)
    w = weighted_sup_norm(u, gamma)
    assert math.exp(-gamma) * s <= w * (1 + 1e-12) + 1e-300
    assert w <= s


def test_second_derivative_quadratic_exact():
    d2 = fd_second_derivative(GridFunction.from_callable(lambda t: t ** 2))
    assert np.max(np.abs(d2.values - 2.0)) < 1e-9


def test_second_derivative_three_nodes():
    d2 = fd_second_derivative(GridFunction([0.0, 0.25, 1.0]))
    assert np.allclose(d2.values, 2.0)


def test_second_derivative_constant():
    assert np.all(fd_second_derivative(GridFunction.constant(3.7)).values == 0.0)


def test_second_derivative_sine():
    u = GridFunction.from_callable(lambda t: np.sin(2 * t), n=1001)
    exact = -4.0 * np.sin(2 * u.t)
    err = np.abs(fd_second_derivative(u).values - exact)
    h = u.h
    # interior: h^2/12 max|u''''| = h^2 * 16/12; one-sided ends: 11/12 h^2 max|u''''|
    assert np.max(err[1:-1]) <= 4e-6
    assert max(err[0], err[-1]) <= 11 / 12 * h * h * 16 * 1.05


@pytest.mark.parametrize("fn,d2", [
    (np.sin, lambda t: -np.sin(t)),
    (np.cos, lambda t: -np.cos(t)),
    (np.exp, np.exp),
    (lambda t: np.sin(5 * t), lambda t: -25 * np.sin(5 * t)),
])
def test_second_derivative_second_order(fn, d2):
    errs = []
    for n in (101, 201, 401):
        u = GridFunction.from_callable(fn, n=n)
        errs.append(np.max(np.abs(fd_second_derivative(u).values - d2(u.t))))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_first_derivative_at_zero():
    assert fd_first_derivative_at_zero(GridFunction.from_callable(lambda t: t)) == pytest.approx(1.0, abs=1e-9)
    assert fd_first_derivative_at_zero(GridFunction.constant(2.0)) == 0.0
    u = GridFunction.from_callable(lambda t: np.sin(3 * t), n=1001)
    # one-sided error h^2/3 |u'''(0)| = 9e-6
    assert fd_first_derivative_at_zero(u) == pytest.approx(3.0, abs=1e-5)


def test_csv_round_trip():
    u = GridFunction.from_callable(lambda t: np.sin(7 * t) / 3, n=33)
    text = u.to_csv()
    assert text.splitlines()[0] == "t,value"
    assert GridFunction.from_csv(text) == u


def test_csv_rejects_wrong_header():
    with pytest.raises(ValueError):
        GridFunction.from_csv("x,y\n0,1\n0.5,1\n1,1\n")
