"""Malthusian parameter, derived constants and limiting laws of the extremes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTail, EmptySample, SolverFailure
from .functions import PiecewiseLinear
from .model import LifetimeOffspringModel, integrate_halfline, validate

RESIDUAL_TOL = 1e-10
MAX_DOUBLINGS = 60

PENDANT = "pendant"
INTERIOR = "interior"
KINDS = (PENDANT, INTERIOR)


def _check_kind(kind):
    if kind not in KINDS:
        raise ValueError(f"kind must be 'pendant' or 'interior', got {kind!r}")


@dataclass(frozen=True)
class MalthusProfile:
    """Solved constants for one model.

    ``growth_constant`` is ``(1 - E exp(-alpha T)) * c_star``, the limit of
    ``exp(-alpha t) #alive / Z_inf``; ``slope`` is ``alpha / (alpha + beta)``.
    """

    model: LifetimeOffspringModel
    alpha: float
    beta: float
    c_star: float
    growth_constant: float
    slope: float
    residual: float = 0.0

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "c_star": self.c_star,
            "growth_constant": self.growth_constant,
            "slope": self.slope,
        }

    # -- characteristic length ---------------------------------------------

    def characteristic_length(self, t: float) -> float:
        """inf{l > 0 : exp(-alpha l) P(T > l) <= exp(-alpha t)}.

        Bisection on the monotone map ``l -> alpha l - log P(T > l)`` over
        ``[0, t]``, run until the bracket stops shrinking in floating point.
        The returned upper end honours the right-continuous inverse.
        """
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0:
            return 0.0
        alpha, model = self.alpha, self.model
        target = alpha * t
        lo, hi = 0.0, float(t)
        while True:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                return hi
            if alpha * mid - model.log_tail(mid) >= target:
                hi = mid
            else:
                lo = mid

    def critical_identity_residual(self, t: float) -> float:
        """exp(alpha (t - l_t)) P(T > l_t) - 1."""
        ell = self.characteristic_length(t)
        return math.exp(self.alpha * (t - ell) + self.model.log_tail(ell)) - 1.0

    # -- Poisson limits -------------------------------------------------------

    def _weight(self, kind):
        _check_kind(kind)
        return self.alpha if kind == PENDANT else self.beta

    def limiting_intensity(self, kind: str, x: float) -> float:
        """Density per unit of Z_inf of the limiting point process at ``x``."""
        w = self._weight(kind)
        if w == 0.0:
            return 0.0
        return self.c_star * w * math.exp(-(self.alpha + self.beta) * x)

    def limiting_exceedance(self, kind: str, x: float) -> float:
        """Mean number of limiting atoms in ``[x, inf)`` per unit of Z_inf."""
        s = self.alpha + self.beta
        if s <= 0.0:
            raise DegenerateTail("alpha + beta must be positive")
        w = self._weight(kind)
        if w == 0.0:
            return 0.0
        return self.c_star * w * math.exp(-s * x) / s

    def limiting_max_cdf(self, kind: str, x: float, z_samples) -> float:
        """Mixed-Poisson void probability P(max <= x), mixed over ``z_samples``."""
        z = np.asarray(z_samples, dtype=float)
        if z.size == 0:
            raise EmptySample("need at least one Z sample")
        exc = self.limiting_exceedance(kind, x) if x > -math.inf else math.inf
        if exc == 0.0:
            return 1.0
        with np.errstate(invalid="ignore", over="ignore"):
            vals = np.where(z > 0.0, np.exp(-z * exc), 1.0)
        return float(vals.mean())

    def laplace_exponent(self, phi: PiecewiseLinear, psi: PiecewiseLinear, window: float) -> float:
        """Integral of {alpha (1 - e^-phi) + beta (1 - e^-psi)} e^{-(alpha+beta) x}.

        Test functions are piecewise linear, so each segment integrates in
        closed form.
        """
        phi.check_support(window)
        psi.check_support(window)
        s = self.alpha + self.beta
        total = 0.0
        if self.alpha > 0 and not phi.is_zero:
            total += self.alpha * _one_minus_exp_integral(phi, s)
        if self.beta > 0 and not psi.is_zero:
            total += self.beta * _one_minus_exp_integral(psi, s)
        return total

    def limiting_laplace(self, phi, psi, z_samples, window: float = 3.0) -> float:
        """E exp(-c* Z_inf * laplace_exponent), mixed over ``z_samples``."""
        z = np.asarray(z_samples, dtype=float)
        if z.size == 0:
            raise EmptySample("need at least one Z sample")
        exponent = self.c_star * self.laplace_exponent(phi, psi, window)
        return float(np.exp(-z * exponent).mean())

    # -- characteristics ------------------------------------------------------

    def nerman_mean(self, phi: PiecewiseLinear) -> float:
        """c* * int_0^inf alpha e^{-alpha s} phi(s) P(T > s) ds."""
        alpha, model = self.alpha, self.model

        def integrand(s):
            return alpha * math.exp(-alpha * s) * phi(s) * model.tail(s)

        inner = [x for x in phi.xs if x > 0.0]
        if inner:
            edge = inner[-1]
            head = integrate_halfline(integrand, 0.0, edge, points=inner[:-1] or None, what="m^phi")
            tail = integrate_halfline(integrand, edge, math.inf, what="m^phi")
            value = head + tail
        else:
            value = integrate_halfline(integrand, what="m^phi")
        return self.c_star * value


def _segment_integral(k, h):
    """int_0^h exp(-k u) du."""
    if k == 0.0:
        return h
    return -math.expm1(-k * h) / k


def _one_minus_exp_integral(f: PiecewiseLinear, s: float) -> float:
    """int (1 - exp(-f(x))) exp(-s x) dx over the real line, f vanishing on the left."""
    xs, ys = f.xs, f.ys
    total = 0.0
    for i in range(len(xs) - 1):
        x0, h = xs[i], xs[i + 1] - xs[i]
        slope = (ys[i + 1] - ys[i]) / h
        total += math.exp(-s * x0) * (
            _segment_integral(s, h) - math.exp(-ys[i]) * _segment_integral(s + slope, h)
        )
    total += -math.expm1(-ys[-1]) * math.exp(-s * xs[-1]) / s
    return total


def solve_malthus(model: LifetimeOffspringModel) -> MalthusProfile:
    """Solve E(L exp(-alpha T)) = 1 and fill in the derived constants.

    Brackets by doubling from 1, bisects, then polishes with Newton steps
    using d/da E(L e^{-aT}) = -E(a T e^{-aT} L) / a.
    """
    validate(model)

    def g(a):
        return model.discounted_offspring_moment(a) - 1.0

    lo, hi = 0.0, 1.0
    doublings = 0
    while g(hi) >= 0.0:
        lo = hi
        hi *= 2.0
        doublings += 1
        if doublings > MAX_DOUBLINGS:
            raise SolverFailure(f"could not bracket the Malthusian parameter for {model.label}")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= 1e-13 * hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    alpha = 0.5 * (lo + hi)
    res = g(alpha)
    for _ in range(5):
        deriv = -model.weighted_lifetime_moment(alpha) / alpha
        step = alpha - res / deriv
        if not lo <= step <= hi:
            break
        new_res = g(step)
        if abs(new_res) >= abs(res):
            break
        alpha, res = step, new_res
        if res == 0.0:
            break
    if abs(res) > RESIDUAL_TOL:
        raise SolverFailure(f"residual {res:.3g} exceeds {RESIDUAL_TOL}")

    beta = model.tail_exponent()
    c_star = 1.0 / model.weighted_lifetime_moment(alpha)
    growth = (1.0 - model.lifetime_laplace(alpha)) * c_star
    return MalthusProfile(
        model=model,
        alpha=alpha,
        beta=beta,
        c_star=c_star,
        growth_constant=growth,
        slope=alpha / (alpha + beta),
        residual=res,
    )
