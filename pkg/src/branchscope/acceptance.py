"""The acceptance suite run by ``branchscope check`` and by the test suite.

Each criterion is a function of a shared :class:`Suite`, which caches the
ensembles so that criteria 4 to 10 reuse one family (a) run.  Tolerances are
fixed here and never adjusted per seed.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import engine, extremes, stats
from .functions import PiecewiseLinear
from .malthus import INTERIOR, PENDANT, MalthusProfile, solve_malthus
from .model import catalogue

SUITE_SEED = 0


@dataclass
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.number:2d} {self.title}: {self.detail}"


@dataclass
class Suite:
    """Shared state: models, solved profiles and cached ensembles."""

    seed: int = SUITE_SEED
    threads: int = 1
    backend: str | None = None
    # fault injection: added to every solved alpha before criterion 1 checks it
    alpha_shift: float = 0.0
    order: str = "depth"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.models = catalogue()

    def profile(self, name) -> MalthusProfile:
        key = ("profile", name)
        if key not in self._cache:
            self._cache[key] = solve_malthus(self.models[name])
        return self._cache[key]

    def runs(self, name, t, replicates, record_atoms=True, characteristics=None):
        key = ("runs", name, t, replicates, record_atoms, tuple(sorted((characteristics or {}).items())))
        if key not in self._cache:
            cfg = engine.SimulationConfig(
                horizon=t, seed=self.seed, record_atoms=record_atoms,
                characteristics=dict(characteristics or {}), order=self.order,
            )
            self._cache[key] = engine.run_replicates(
                self.models[name], self.profile(name), cfg, replicates, self.threads, self.backend
            )
        return self._cache[key]

    # the family (a) ensemble shared by criteria 4 to 10
    MIN1 = PiecewiseLinear.from_knots([(0.0, 0.0), (1.0, 1.0)])

    def main_runs(self):
        return self.runs("exp", 10.0, 2000, True, {"min1": self.MIN1})


def _fmt(x):
    return f"{x:.6g}"


# --------------------------------------------------------------------------
# criteria


def c01_solver(s: Suite) -> Outcome:
    cases = [("exp", 1.0), ("correlated", 1.0), ("exp_rate2_k3", 4.0)]
    ok, parts = True, []
    for name, expected in cases:
        alpha = s.profile(name).alpha + s.alpha_shift
        residual = abs(s.models[name].discounted_offspring_moment(alpha) - 1.0)
        good = abs(alpha - expected) <= 1e-9 and residual <= 1e-10
        ok &= good
        parts.append(f"{name} alpha={alpha!r} residual={residual:.1e}")
    return Outcome(1, "Malthus solver", ok, "; ".join(parts))


def c02_constants(s: Suite) -> Outcome:
    cases = [("exp", 2.0, 1.0), ("correlated", 4.0 / 3.0, 2.0 / 3.0)]
    ok, parts = True, []
    for name, c_exp, g_exp in cases:
        p, m = s.profile(name), s.models[name]
        c_quad = 1.0 / m.weighted_lifetime_moment(p.alpha, method="quad")
        g_quad = (1.0 - m.lifetime_laplace(p.alpha, method="quad")) * c_quad
        good = all(abs(a - b) <= 1e-9 for a, b in
                   ((p.c_star, c_exp), (p.c_star, c_quad), (p.growth_constant, g_exp), (p.growth_constant, g_quad)))
        ok &= good
        parts.append(f"{name} c*={_fmt(p.c_star)} growth={_fmt(p.growth_constant)}")
    return Outcome(2, "constants", ok, "; ".join(parts))


def c03_characteristic_length(s: Suite) -> Outcome:
    p = s.profile("exp")
    err = max(abs(p.characteristic_length(t) - t / 2) for t in (1.0, 5.0, 10.0, 20.0))
    res = max(abs(s.profile(n).critical_identity_residual(t)) for n in s.models for t in (5.0, 10.0, 20.0))
    ok = err <= 1e-9 and res <= 1e-6
    return Outcome(3, "characteristic length", ok, f"max |l_t - t/2| = {err:.1e}; max residual = {res:.1e}")


def c04_martingale(s: Suite) -> Outcome:
    mean, se = stats.martingale_mean(s.main_runs())
    ok = abs(mean - 1.0) <= 4 * se
    return Outcome(4, "martingale mean", ok, f"mean Z_t = {_fmt(mean)} +- {_fmt(se)}")


def c05_growth(s: Suite) -> Outcome:
    value, se = stats.growth_ratio(s.main_runs(), s.profile("exp"))
    target = s.profile("exp").growth_constant
    ok = abs(value - target) <= 0.05 * target
    return Outcome(5, "growth law", ok, f"ratio = {_fmt(value)} +- {_fmt(se)}, target {_fmt(target)}")


def c06_nerman(s: Suite) -> Outcome:
    p = s.profile("exp")
    value, se = stats.nerman_ratio(s.main_runs(), p, "min1")
    target = p.nerman_mean(s.MIN1)
    ok = abs(value - target) <= 0.07 * target
    return Outcome(6, "Nerman census", ok, f"ratio = {_fmt(value)} +- {_fmt(se)}, target {_fmt(target)}")


def c07_intensity(s: Suite) -> Outcome:
    rows = stats.intensity_test(s.main_runs(), s.profile("exp"), (-0.5, 0.0, 0.5, 1.0))
    worst = max(max(r[f"{PENDANT}_rel_error"], r[f"{INTERIOR}_rel_error"]) for r in rows)
    return Outcome(7, "intensity curves", worst <= 0.15, f"max relative error = {_fmt(worst)}")


def c08_pendant_fraction(s: Suite) -> Outcome:
    frac = extremes.pendant_fraction(s.main_runs(), 0.0)
    return Outcome(8, "pendant fraction", 0.45 <= frac <= 0.55, f"fraction above 0 = {_fmt(frac)}")


def c09_max_law(s: Suite) -> Outcome:
    dp, di = stats.max_law_test(s.main_runs(), s.profile("exp"))
    ok = dp <= 0.05 and di <= 0.05
    return Outcome(9, "max laws", ok, f"sup distance pendant {_fmt(dp)}, interior {_fmt(di)}")


def c10_laplace(s: Suite) -> Outcome:
    ramp = PiecewiseLinear.ramp()
    emp, lim, err, se = stats.laplace_test(s.main_runs(), s.profile("exp"), ramp, ramp)
    return Outcome(10, "Laplace functional", err <= 0.02,
                   f"empirical {_fmt(emp)} +- {_fmt(se)}, limit {_fmt(lim)}")


def c11_heavy_tail(s: Suite) -> Outcome:
    name = "pareto_geometric"
    p = s.profile(name)
    runs = s.runs(name, 30.0, 500)
    row = stats.intensity_test(runs, p, (-1.0,))[0]
    interior = row[INTERIOR]
    mp, _ = stats.slope_estimates(runs)
    ok = interior <= 0.05 and mp >= 0.8
    survived = sum(r.survived for r in runs)
    return Outcome(11, "heavy-tail degeneracy", ok,
                   f"interior exceedance above -1 per unit z = {_fmt(interior)}; "
                   f"mean M^p/t = {_fmt(mp)} (l_t/t = {_fmt(p.characteristic_length(30.0) / 30.0)}, "
                   f"{survived} survivors)")


def c12_slope(s: Suite) -> Outcome:
    p = s.profile("exp")
    by_t = {t: s.runs("exp", t, 1000, record_atoms=False) for t in (6.0, 10.0, 14.0)}
    rows = stats.slope_test(by_t, p)
    dev_p = [r["dev_pendant"] for r in rows]
    dev_i = [r["dev_interior"] for r in rows]
    ok = (dev_p[-1] <= 0.08 and dev_i[-1] <= 0.08
          and stats.non_increasing(dev_p) and stats.non_increasing(dev_i))
    table = ", ".join(f"t={r['t']:g}: {r['mean_mp_over_t']:.4f}/{r['mean_mi_over_t']:.4f}" for r in rows)
    return Outcome(12, "slope convergence", ok, f"mean M^p/t / M^i/t {table}")


def c13_oracle(s: Suite) -> Outcome:
    mismatches = 0
    for name in ("exp", "pareto", "correlated"):
        m, p = s.models[name], s.profile(name)
        for seed in range(100):
            cfg = engine.SimulationConfig(horizon=5.0, seed=seed, characteristics={"min1": s.MIN1})
            fast = engine.run(m, p, cfg, backend=s.backend)
            slow = engine.run_naive(m, p, cfg)
            mismatches += fast != slow
    return Outcome(13, "oracle equivalence", mismatches == 0, f"{mismatches} mismatches in 300 trees")


_DETERMINISM_TOML = """\
[model]
family = "exp"
rate = 1.0
[model.offspring]
law = "constant"
k = 2

[run]
t = 6.0
seed = {seed}
replicates = 200

[analysis]
census = {{ min1 = [[0.0, 0.0], [1.0, 1.0]] }}
laplace = [{{ name = "ramp", phi = [[0.0, 0.0], [1.0, 1.0]], psi = [[0.0, 0.0], [1.0, 1.0]] }}]
"""


def c14_determinism(s: Suite) -> Outcome:
    files = ("report.json", "atoms.csv", "maxima.csv")
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "ensemble.toml"
        cfg.write_text(_DETERMINISM_TOML.format(seed=s.seed))
        outputs = []
        for i, threads in enumerate((1, 2)):
            out = Path(tmp) / f"out{i}"
            cmd = [sys.executable, "-m", "branchscope", "ensemble", "--config", str(cfg),
                   "--out", str(out), "--threads", str(threads)]
            env = {k: v for k, v in os.environ.items() if k != "BRANCHSCOPE_SEED"}
            proc = subprocess.run(cmd, capture_output=True, text=True, env=env)
            if proc.returncode != 0:
                return Outcome(14, "determinism", False, f"ensemble exited {proc.returncode}: {proc.stderr.strip()[-200:]}")
            outputs.append([(out / f).read_bytes() for f in files])
    same = [a == b for a, b in zip(*outputs)]
    detail = ", ".join(f"{f} {'identical' if ok else 'DIFFERS'}" for f, ok in zip(files, same))
    return Outcome(14, "determinism", all(same), detail)


CRITERIA: dict[int, Callable[[Suite], Outcome]] = {
    1: c01_solver, 2: c02_constants, 3: c03_characteristic_length, 4: c04_martingale,
    5: c05_growth, 6: c06_nerman, 7: c07_intensity, 8: c08_pendant_fraction,
    9: c09_max_law, 10: c10_laplace, 11: c11_heavy_tail, 12: c12_slope,
    13: c13_oracle, 14: c14_determinism,
}


def evaluate(number: int, suite: Suite) -> Outcome:
    """Run one criterion; an unexpected exception counts as a failure."""
    fn = CRITERIA[number]
    try:
        return fn(suite)
    except Exception as exc:  # reported, not raised: check must finish
        return Outcome(number, fn.__name__[4:].replace("_", " "), False, f"error: {type(exc).__name__}: {exc}")


def run_all(suite: Suite | None = None, only=None, stream=None):
    suite = suite or Suite()
    outcomes = []
    for number in sorted(only or CRITERIA):
        out = evaluate(number, suite)
        outcomes.append(out)
        if stream is not None:
            print(out.line(), file=stream, flush=True)
    return outcomes
