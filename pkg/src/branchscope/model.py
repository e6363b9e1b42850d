"""Joint lifetime/offspring laws (T, L) for Sevast'yanov branching processes.

Three families are provided:

* :class:`IndependentExpLifetime` -- exponential lifetime, independent
  offspring (continuous-time Galton-Watson).
* :class:`IndependentParetoLifetime` -- ``P(T > t) = (1 + t)^-c``, independent
  offspring; heavy tail, so the tail exponent is 0.
* :class:`CorrelatedPoissonOffspring` -- exponential lifetime and
  ``L | T ~ 1 + Poisson(gamma * T)``.

Every model exposes exact sampling from a counter stream, its survival
function and the Laplace-type moments needed to solve for the Malthusian
parameter.  Moments use closed forms where one exists and adaptive
quadrature otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from scipy import integrate

from .errors import ModelRejected, QuadratureFailure

QUAD_TOL = 1e-12
QUAD_LIMIT = 5000

# kernel codes, mirrored in _ckernel.pyx
FAMILY_EXP, FAMILY_PARETO, FAMILY_CORRELATED = 0, 1, 2
OFF_CONSTANT, OFF_TWO_POINT, OFF_GEOMETRIC = 0, 1, 2


# --------------------------------------------------------------------------
# offspring laws


@dataclass(frozen=True)
class Constant:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ModelRejected("offspring", f"k must be a nonnegative integer, got {self.k}")

    def mean(self):
        return float(self.k)

    def pmf(self, n):
        return 1.0 if n == self.k else 0.0

    def sample(self, stream):
        return int(self.k)

    def kernel_spec(self):
        return OFF_CONSTANT, int(self.k), 0.0

    def describe(self):
        return f"const(k={self.k})"


@dataclass(frozen=True)
class TwoPoint:
    """``L = 0`` with probability ``p0``, otherwise ``L = k``."""

    p0: float
    k: int

    def __post_init__(self):
        if not 0.0 <= self.p0 < 1.0:
            raise ModelRejected("offspring", f"p0 must lie in [0, 1), got {self.p0}")
        if int(self.k) != self.k or self.k < 2:
            raise ModelRejected("offspring", f"k must be an integer >= 2, got {self.k}")

    def mean(self):
        return (1.0 - self.p0) * self.k

    def pmf(self, n):
        if n == 0:
            return self.p0
        return 1.0 - self.p0 if n == self.k else 0.0

    def sample(self, stream):
        return 0 if stream.uniform() < self.p0 else int(self.k)

    def kernel_spec(self):
        return OFF_TWO_POINT, int(self.k), float(self.p0)

    def describe(self):
        return f"two_point(p0={self.p0}, k={self.k})"


@dataclass(frozen=True)
class Geometric:
    """``P(L = n) = (1 - q) q^n`` on ``n >= 0`` with ``q = mean / (1 + mean)``."""

    mean_value: float

    def __post_init__(self):
        if not (self.mean_value > 0.0 and math.isfinite(self.mean_value)):
            raise ModelRejected("offspring", f"mean must be positive, got {self.mean_value}")

    @property
    def q(self):
        return self.mean_value / (1.0 + self.mean_value)

    def mean(self):
        return float(self.mean_value)

    def pmf(self, n):
        q = self.q
        return (1.0 - q) * q**n if n >= 0 else 0.0

    def sample(self, stream):
        return int(math.floor(math.log(stream.uniform()) / math.log(self.q)))

    def kernel_spec(self):
        return OFF_GEOMETRIC, 0, self.q

    def describe(self):
        return f"geometric(mean={self.mean_value})"


OffspringLaw = Constant | TwoPoint | Geometric


# --------------------------------------------------------------------------
# quadrature


def integrate_halfline(f, lower=0.0, upper=math.inf, points=None, what="integral"):
    """Integrate ``f`` on ``[lower, upper]`` to absolute tolerance ``QUAD_TOL``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if math.isinf(upper):
            value, abserr, info = integrate.quad(
                f, lower, upper, epsabs=QUAD_TOL, epsrel=1e-13, limit=QUAD_LIMIT,
                full_output=1,
            )[:3]
        else:
            value, abserr, info = integrate.quad(
                f, lower, upper, epsabs=QUAD_TOL, epsrel=1e-13, limit=QUAD_LIMIT,
                points=points, full_output=1,
            )[:3]
    if abserr > QUAD_TOL and abserr > 1e-13 * abs(value):
        raise QuadratureFailure(
            f"{what}: error estimate {abserr:.3g} exceeds tolerance after "
            f"{info['neval']} evaluations"
        )
    return value


# --------------------------------------------------------------------------
# joint laws


@dataclass(frozen=True)
class LifetimeOffspringModel:
    """Base class; subclasses define the lifetime law and how L depends on T."""

    label: str = field(default="", kw_only=True)

    # span of the lifetime lattice; ``None`` means the law has a density
    lattice_span = None

    def __post_init__(self):
        self._check_parameters()
        if not self.label:
            object.__setattr__(self, "label", self.describe())
        if not self.mean_offspring() > 1.0:
            raise ModelRejected(
                "supercriticality", f"E(L) = {self.mean_offspring()} is not > 1"
            )

    # subclasses override -------------------------------------------------
    family = ""

    def _check_parameters(self):
        pass

    def describe(self):
        raise NotImplementedError

    def tail(self, ell: float) -> float:
        raise NotImplementedError

    def density(self, t: float) -> float:
        raise NotImplementedError

    def tail_exponent(self) -> float:
        raise NotImplementedError

    def offspring_mean_given(self, t: float) -> float:
        """E(L | T = t)."""
        raise NotImplementedError

    def sample_lifetime(self, u: float) -> float:
        raise NotImplementedError

    def sample_offspring(self, t: float, stream) -> int:
        raise NotImplementedError

    def kernel_spec(self) -> tuple:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def _closed_moments(self, a):
        """(discounted, weighted, laplace) in closed form, or None."""
        return None

    def l_log_l_finite(self) -> tuple[bool, str]:
        raise NotImplementedError

    # shared ----------------------------------------------------------------
    def log_tail(self, ell: float) -> float:
        return math.log(self.tail(ell))

    def mean_offspring(self) -> float:
        return self.discounted_offspring_moment(0.0)

    def sample_pair(self, stream) -> tuple[float, int]:
        """Draw (T, L); the lifetime consumes the first uniform."""
        t = self.sample_lifetime(stream.uniform())
        return t, self.sample_offspring(t, stream)

    def discounted_offspring_moment(self, a: float, method: str = "auto") -> float:
        """E(L exp(-a T))."""
        if a < 0:
            raise ValueError("a must be nonnegative")
        closed = self._closed_moments(a) if method == "auto" else None
        if closed is not None:
            return closed[0]
        return integrate_halfline(
            lambda t: self.offspring_mean_given(t) * math.exp(-a * t) * self.density(t),
            what="E(L exp(-aT))",
        )

    def weighted_lifetime_moment(self, a: float, method: str = "auto") -> float:
        """E(a T exp(-a T) L); its reciprocal at the Malthusian parameter is c*."""
        if a <= 0:
            raise ValueError("a must be positive")
        closed = self._closed_moments(a) if method == "auto" else None
        if closed is not None:
            return closed[1]
        return integrate_halfline(
            lambda t: a * t * math.exp(-a * t) * self.offspring_mean_given(t) * self.density(t),
            what="E(aT exp(-aT) L)",
        )

    def lifetime_laplace(self, a: float, method: str = "auto") -> float:
        """E(exp(-a T))."""
        if a < 0:
            raise ValueError("a must be nonnegative")
        if a == 0:
            return 1.0
        closed = self._closed_moments(a) if method == "auto" else None
        if closed is not None:
            return closed[2]
        return integrate_halfline(
            lambda t: math.exp(-a * t) * self.density(t), what="E(exp(-aT))"
        )

    def to_dict(self):
        return {"family": self.family, "label": self.label, **self.params()}


def _offspring_from_params(offspring):
    return {"offspring": offspring.describe()}


@dataclass(frozen=True)
class IndependentExpLifetime(LifetimeOffspringModel):
    rate: float = 1.0
    offspring: OffspringLaw = Constant(2)

    family = "exp"

    def _check_parameters(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ModelRejected("lifetime", f"rate must be positive, got {self.rate}")

    def describe(self):
        return f"exp(rate={self.rate}) x {self.offspring.describe()}"

    def tail(self, ell):
        return math.exp(-self.rate * ell) if ell > 0 else 1.0

    def log_tail(self, ell):
        return -self.rate * ell if ell > 0 else 0.0

    def density(self, t):
        return self.rate * math.exp(-self.rate * t)

    def tail_exponent(self):
        return float(self.rate)

    def offspring_mean_given(self, t):
        return self.offspring.mean()

    def mean_offspring(self):
        return self.offspring.mean()

    def sample_lifetime(self, u):
        return -math.log(u) / self.rate

    def sample_offspring(self, t, stream):
        return self.offspring.sample(stream)

    def kernel_spec(self):
        code, k, q = self.offspring.kernel_spec()
        return FAMILY_EXP, float(self.rate), 0.0, code, k, q

    def params(self):
        return {"rate": self.rate, **_offspring_from_params(self.offspring)}

    def _closed_moments(self, a):
        r, m = self.rate, self.offspring.mean()
        lap = r / (r + a)
        return m * lap, m * a * r / (r + a) ** 2, lap

    def l_log_l_finite(self):
        return True, "offspring law has finite exponential moments or bounded support"


@dataclass(frozen=True)
class IndependentParetoLifetime(LifetimeOffspringModel):
    """Lifetime with ``P(T > t) = (1 + t)^-shape``."""

    shape: float = 2.0
    offspring: OffspringLaw = Constant(2)

    family = "pareto"

    def _check_parameters(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ModelRejected("lifetime", f"shape must be positive, got {self.shape}")

    def describe(self):
        return f"pareto(c={self.shape}) x {self.offspring.describe()}"

    def tail(self, ell):
        return (1.0 + ell) ** -self.shape if ell > 0 else 1.0

    def log_tail(self, ell):
        return -self.shape * math.log1p(ell) if ell > 0 else 0.0

    def density(self, t):
        return self.shape * (1.0 + t) ** (-self.shape - 1.0)

    def tail_exponent(self):
        return 0.0

    def offspring_mean_given(self, t):
        return self.offspring.mean()

    def mean_offspring(self):
        return self.offspring.mean()

    def sample_lifetime(self, u):
        return math.expm1(-math.log(u) / self.shape)

    def sample_offspring(self, t, stream):
        return self.offspring.sample(stream)

    def kernel_spec(self):
        code, k, q = self.offspring.kernel_spec()
        return FAMILY_PARETO, float(self.shape), 0.0, code, k, q

    def params(self):
        return {"shape": self.shape, **_offspring_from_params(self.offspring)}

    def l_log_l_finite(self):
        return True, "offspring law has finite exponential moments or bounded support"


@dataclass(frozen=True)
class CorrelatedPoissonOffspring(LifetimeOffspringModel):
    """Exponential lifetime, ``L = 1 + N`` with N the number of points of a
    rate-``gamma`` Poisson process during the lifetime."""

    rate: float = 1.0
    gamma: float = 2.0

    family = "correlated"

    def _check_parameters(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ModelRejected("lifetime", f"rate must be positive, got {self.rate}")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ModelRejected("offspring", f"gamma must be nonnegative, got {self.gamma}")

    def describe(self):
        return f"exp(rate={self.rate}) x 1+poisson(gamma={self.gamma}*T)"

    def tail(self, ell):
        return math.exp(-self.rate * ell) if ell > 0 else 1.0

    def log_tail(self, ell):
        return -self.rate * ell if ell > 0 else 0.0

    def density(self, t):
        return self.rate * math.exp(-self.rate * t)

    def tail_exponent(self):
        return float(self.rate)

    def offspring_mean_given(self, t):
        return 1.0 + self.gamma * t

    def mean_offspring(self):
        return 1.0 + self.gamma / self.rate

    def sample_lifetime(self, u):
        return -math.log(u) / self.rate

    def sample_offspring(self, t, stream):
        # count arrivals of a unit-rate process before gamma * t
        budget = self.gamma * t
        n = 0
        if budget <= 0.0:
            return 1
        s = -math.log(stream.uniform())
        while s <= budget:
            n += 1
            s += -math.log(stream.uniform())
        return 1 + n

    def kernel_spec(self):
        return FAMILY_CORRELATED, float(self.rate), float(self.gamma), 0, 0, 0.0

    def params(self):
        return {"rate": self.rate, "gamma": self.gamma}

    def _closed_moments(self, a):
        r, g = self.rate, self.gamma
        s = r + a
        discounted = r / s + g * r / s**2
        weighted = a * (r / s**2 + 2.0 * g * r / s**3)
        return discounted, weighted, r / s

    def l_log_l_finite(self):
        return True, "E(L^2) = 1 + 3 gamma/rate + 2 (gamma/rate)^2 is finite"


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    label: str
    checks: list = field(default_factory=list)  # (name, passed, detail)

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def failures(self):
        return [name for name, ok, _ in self.checks if not ok]

    def __str__(self):
        lines = [f"model {self.label}"]
        for name, ok, detail in self.checks:
            lines.append(f"  {'pass' if ok else 'FAIL'}  {name}: {detail}")
        return "\n".join(lines)


def validate(model: LifetimeOffspringModel, raise_on_failure: bool = True) -> ValidationReport:
    """Check supercriticality, non-lattice lifetimes and the L log L moment."""
    report = ValidationReport(model.label)
    try:
        mean = model.mean_offspring()
    except Exception as exc:  # malformed parameters
        mean = float("nan")
        report.checks.append(("supercriticality", False, f"E(L) not computable: {exc}"))
    else:
        ok = 1.0 < mean < math.inf
        report.checks.append(("supercriticality", ok, f"E(L) = {mean!r}"))

    span = model.lattice_span
    if span is None:
        report.checks.append(("non-lattice", True, "lifetime law has a density"))
    else:
        report.checks.append(("non-lattice", False, f"lifetime concentrated on {span}*N"))

    if hasattr(model, "l_log_l_finite"):
        try:
            ok, detail = model.l_log_l_finite()
        except NotImplementedError:
            ok, detail = False, "no analytic bound available"
        report.checks.append(("L log L", ok, detail))

    if raise_on_failure and not report.passed:
        name = report.failures()[0]
        detail = next(d for n, ok, d in report.checks if n == name)
        raise ModelRejected(name, detail)
    return report


def sample_pair(model: LifetimeOffspringModel, stream) -> tuple[float, int]:
    return model.sample_pair(stream)


def catalogue() -> dict:
    """Reference models used by the acceptance suite and the examples.

    One representative of each family, plus variants with other parameters.
    The heavy-tailed models use c = 2.
    """
    return {
        "exp": IndependentExpLifetime(rate=1.0, offspring=Constant(2)),
        "exp_rate2_k3": IndependentExpLifetime(rate=2.0, offspring=Constant(3)),
        "exp_rate2_geometric": IndependentExpLifetime(rate=2.0, offspring=Geometric(2.0)),
        "pareto": IndependentParetoLifetime(shape=2.0, offspring=TwoPoint(0.4, 3)),
        "pareto_geometric": IndependentParetoLifetime(shape=2.0, offspring=Geometric(1.3)),
        "correlated": CorrelatedPoissonOffspring(rate=1.0, gamma=2.0),
        "correlated_rate_half": CorrelatedPoissonOffspring(rate=0.5, gamma=1.0),
    }
