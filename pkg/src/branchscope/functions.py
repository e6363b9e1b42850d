"""Piecewise-linear functions used as characteristics and test functions."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedTestFunction


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation between knots, constant outside the knot range.

    The evaluation formula is shared with the compiled kernel so that census
    values agree bitwise between backends.
    """

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        if not xs or len(xs) != len(ys):
            raise ValueError("need at least one knot and matching xs/ys")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("knot positions must be strictly increasing")
        if not all(math.isfinite(v) for v in xs + ys):
            raise ValueError("knots must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def from_knots(cls, knots):
        knots = list(knots)
        return cls(tuple(k[0] for k in knots), tuple(k[1] for k in knots))

    @classmethod
    def constant(cls, value):
        return cls((0.0,), (float(value),))

    @classmethod
    def ramp(cls, x0=0.0, height=1.0, width=1.0):
        """0 below ``x0``, rising linearly to ``height`` over ``width``."""
        return cls((x0, x0 + width), (0.0, height))

    @property
    def knots(self):
        return list(zip(self.xs, self.ys))

    def __call__(self, a: float) -> float:
        xs, ys = self.xs, self.ys
        if a <= xs[0]:
            return ys[0]
        if a >= xs[-1]:
            return ys[-1]
        i = bisect.bisect_right(xs, a) - 1
        return ys[i] + (ys[i + 1] - ys[i]) * ((a - xs[i]) / (xs[i + 1] - xs[i]))

    def evaluate(self, a) -> np.ndarray:
        """Vectorised evaluation; same arithmetic as ``__call__``."""
        a = np.asarray(a, dtype=float)
        xs = np.asarray(self.xs)
        ys = np.asarray(self.ys)
        out = np.empty_like(a)
        lo = a <= xs[0]
        hi = a >= xs[-1]
        mid = ~(lo | hi)
        out[lo] = ys[0]
        out[hi] = ys[-1]
        if mid.any():
            am = a[mid]
            i = np.searchsorted(xs, am, side="right") - 1
            out[mid] = ys[i] + (ys[i + 1] - ys[i]) * ((am - xs[i]) / (xs[i + 1] - xs[i]))
        return out

    @property
    def is_zero(self):
        return all(y == 0.0 for y in self.ys)

    def is_nonnegative(self):
        return all(y >= 0.0 for y in self.ys)

    def check_support(self, window: float):
        """Require a nonnegative function vanishing below ``-window``."""
        if not self.is_nonnegative():
            raise UnsupportedTestFunction("test functions must be nonnegative")
        if self.is_zero:
            return
        if self.xs[0] < -window:
            raise UnsupportedTestFunction(
                f"knot at {self.xs[0]} lies below the window bound {-window}"
            )
        if self.ys[0] != 0.0:
            raise UnsupportedTestFunction(
                "test function does not vanish left of its first knot"
            )
