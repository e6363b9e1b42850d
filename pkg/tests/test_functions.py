import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from branchscope.errors import UnsupportedTestFunction
from branchscope.functions import PiecewiseLinear

finite = st.floats(-50, 50, allow_nan=False)


@st.composite
def piecewise(draw):
    n = draw(st.integers(1, 6))
    xs = sorted(set(draw(st.lists(finite, min_size=n, max_size=n))))
    ys = draw(st.lists(st.floats(0, 10), min_size=len(xs), max_size=len(xs)))
    return PiecewiseLinear(tuple(xs), tuple(ys))


def test_ramp_values():
    r = PiecewiseLinear.ramp()
    assert r(-1.0) == 0.0
    assert r(0.25) == 0.25
    assert r(1.0) == 1.0
    assert r(7.0) == 1.0


def test_constant():
    c = PiecewiseLinear.constant(2.5)
    assert c(-100) == c(0) == c(100) == 2.5
    assert not c.is_zero
    assert PiecewiseLinear.constant(0.0).is_zero


def test_rejects_unsorted_knots():
    with pytest.raises(ValueError):
        PiecewiseLinear((1.0, 0.0), (0.0, 1.0))
    with pytest.raises(ValueError):
        PiecewiseLinear((0.0, 0.0), (0.0, 1.0))
    with pytest.raises(ValueError):
        PiecewiseLinear((), ())


def test_check_support():
    PiecewiseLinear.ramp(x0=-3.0).check_support(3.0)
    PiecewiseLinear.constant(0.0).check_support(3.0)
    with pytest.raises(UnsupportedTestFunction):
        PiecewiseLinear.ramp(x0=-3.5).check_support(3.0)
    with pytest.raises(UnsupportedTestFunction):
        PiecewiseLinear.constant(1.0).check_support(3.0)
    with pytest.raises(UnsupportedTestFunction):
        PiecewiseLinear((0.0, 1.0), (0.0, -1.0)).check_support(3.0)


@given(piecewise(), finite)
def test_value_between_knot_extremes(f, a):
    v = f(a)
    assert min(f.ys) - 1e-12 <= v <= max(f.ys) + 1e-12


@given(piecewise(), st.lists(finite, min_size=1, max_size=20))
def test_vectorised_matches_scalar(f, pts):
    assert np.array_equal(f.evaluate(np.array(pts)), np.array([f(p) for p in pts]))


@given(piecewise())
def test_interpolates_knots(f):
    for x, y in f.knots:
        assert math.isclose(f(x), y, abs_tol=1e-12)
