"""Ensemble estimators comparing simulated extremes with their limit laws.

Z_inf is not observable, so every comparison uses the runs' own Z_t values
as the mixing sample: per-unit-Z quantities are ratios of means, and limiting
distributions are mixed over the empirical Z_t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine, extremes
from .errors import MissingCensus, TooFewSurvivors, ZeroZ
from .functions import PiecewiseLinear
from .malthus import INTERIOR, PENDANT, MalthusProfile

MIN_SURVIVORS = 50
MIN_REPLICATES = 100
DEFAULT_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
MAX_LAW_GRID = tuple(np.linspace(-3.0, 3.0, 61))


def _usable(runs):
    return [r for r in runs if r.usable]


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else math.nan
    return float(v.mean()), float(se)


def ratio_of_means(y, x):
    """mean(y) / mean(x) with a delta-method standard error."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    mx = x.mean()
    if mx == 0.0:
        raise ZeroZ("mean of the denominator is zero")
    r = y.mean() / mx
    n = y.size
    if n < 2:
        return float(r), math.nan
    resid = y - r * x
    se = math.sqrt(float(resid @ resid) / (n * (n - 1))) / mx
    return float(r), float(se)


# --------------------------------------------------------------------------
# estimators


def martingale_mean(runs):
    """Mean and standard error of Z_t; its expectation is 1 at every t."""
    return _mean_se([r.z_t for r in _usable(runs)])


def growth_ratio(runs, profile: MalthusProfile):
    """mean(e^{-alpha t} #alive) / mean(Z_t); target ``profile.growth_constant``."""
    runs = _usable(runs)
    if sum(r.survived for r in runs) < MIN_SURVIVORS:
        raise TooFewSurvivors(f"need at least {MIN_SURVIVORS} surviving runs")
    y = [math.exp(-profile.alpha * r.horizon) * r.n_alive for r in runs]
    return ratio_of_means(y, [r.z_t for r in runs])


def nerman_ratio(runs, profile: MalthusProfile, label: str):
    """mean(e^{-alpha t} Z_t^phi) / mean(Z_t) for a registered characteristic."""
    runs = _usable(runs)
    if any(label not in r.census for r in runs):
        raise MissingCensus(label)
    y = [math.exp(-profile.alpha * r.horizon) * r.census[label] for r in runs]
    if not any(y):
        return 0.0, 0.0
    return ratio_of_means(y, [r.z_t for r in runs])


def intensity_test(runs, profile: MalthusProfile, grid=DEFAULT_GRID):
    """Per-unit-Z mean exceedance counts against the limiting intensities."""
    runs = _usable(runs)
    if not runs:
        raise TooFewSurvivors("no usable runs")
    window = runs[0].window
    grid = np.asarray(grid, dtype=float)
    if grid.size and grid.min() < -window + 0.5:
        raise extremes.GridBelowWindow(
            f"intensity grid must stay above {-window + 0.5} to avoid window-edge effects"
        )
    z = np.array([r.z_t for r in runs])
    if z.mean() == 0.0:
        raise ZeroZ("all Z_t are zero")
    curves = [extremes.exceedance(r, grid) for r in runs]
    pend = np.array([c.pendant_counts for c in curves], dtype=float)
    inter = np.array([c.interior_counts for c in curves], dtype=float)
    rows = []
    for j, x in enumerate(grid):
        row = {"x": float(x)}
        for kind, counts in ((PENDANT, pend[:, j]), (INTERIOR, inter[:, j])):
            value, se = ratio_of_means(counts, z)
            target = profile.limiting_exceedance(kind, float(x))
            row[kind] = value
            row[f"{kind}_se"] = se
            row[f"{kind}_target"] = target
            row[f"{kind}_rel_error"] = abs(value - target) / target if target > 0 else math.nan
        row["pendant_pooled"] = int(pend[:, j].sum())
        row["interior_pooled"] = int(inter[:, j].sum())
        rows.append(row)
    return rows


def empirical_max_cdf(maxima, x):
    """Fraction of maxima <= x, with ``None`` read as -inf."""
    vals = np.array([-math.inf if m is None else m for m in maxima])
    return float(np.mean(vals <= x))


def max_law_test(runs, profile: MalthusProfile, grid=MAX_LAW_GRID, min_runs=500):
    """Sup distances between empirical and limiting CDFs of the recentred maxima."""
    runs = _usable(runs)
    if len(runs) < min_runs:
        raise ValueError(f"max_law_test needs at least {min_runs} runs, got {len(runs)}")
    z = [r.z_t for r in runs]
    maxima = [extremes.recentred_maxima(r) for r in runs]
    dist = {}
    for idx, kind in enumerate((PENDANT, INTERIOR)):
        m = [mx[idx] for mx in maxima]
        dist[kind] = max(
            abs(empirical_max_cdf(m, x) - profile.limiting_max_cdf(kind, float(x), z))
            for x in grid
        )
    return dist[PENDANT], dist[INTERIOR]


def laplace_test(runs, profile: MalthusProfile, phi: PiecewiseLinear, psi: PiecewiseLinear):
    """Empirical E exp(-<E^p, phi> - <E^i, psi>) against its limit.

    Returns ``(empirical, limiting, abs_error, stderr)``.
    """
    runs = _usable(runs)
    window = runs[0].window
    phi.check_support(window)
    psi.check_support(window)
    vals = []
    for r in runs:
        s = phi.evaluate(r.pendant_atoms.atoms).sum() + psi.evaluate(r.interior_atoms.atoms).sum()
        vals.append(math.exp(-s))
    emp, se = _mean_se(vals)
    lim = profile.limiting_laplace(phi, psi, [r.z_t for r in runs], window)
    return emp, lim, abs(emp - lim), se


def slope_estimates(runs):
    """mean(M^p_t / t) and mean(M^i_t / t) over surviving runs."""
    surv = [r for r in _usable(runs) if r.survived]
    if not surv:
        return math.nan, math.nan
    mp = np.mean([r.m_pendant / r.horizon for r in surv])
    mi_vals = [r.m_interior / r.horizon for r in surv if r.m_interior is not None]
    mi = np.mean(mi_vals) if mi_vals else math.nan
    return float(mp), float(mi)


def slope_test(runs_by_t: dict, profile: MalthusProfile):
    """Per horizon, mean longest-edge length over t against the limiting slope."""
    if len(runs_by_t) < 3:
        raise ValueError("slope_test needs at least three horizons")
    rows = []
    for t in sorted(runs_by_t):
        mp, mi = slope_estimates(runs_by_t[t])
        rows.append({
            "t": float(t),
            "survived": sum(r.survived for r in runs_by_t[t]),
            "mean_mp_over_t": mp,
            "mean_mi_over_t": mi,
            "dev_pendant": abs(mp - profile.slope),
            "dev_interior": abs(mi - profile.slope),
            "ell_over_t": profile.characteristic_length(t) / t,
        })
    return rows


def non_increasing(values):
    return all(b <= a for a, b in zip(values, values[1:]))


# --------------------------------------------------------------------------
# ensemble


@dataclass
class Analysis:
    grid: tuple = DEFAULT_GRID
    laplace_pairs: list = field(default_factory=list)  # (name, phi, psi)
    horizons: tuple = ()
    max_law_min_runs: int = 500


@dataclass
class EnsembleReport:
    model: str
    profile: dict
    horizon: float
    ell_t: float
    seed: int
    backend: str
    requested: int
    survived: int
    extinct: int
    capped: int
    martingale: dict
    growth: dict
    nerman: list
    exceedance: list
    pendant_fraction: list
    max_law: dict
    laplace: list
    slope: dict
    slope_table: list = field(default_factory=list)
    runs: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "model": self.model,
            "profile": self.profile,
            "horizon": self.horizon,
            "ell_t": self.ell_t,
            "seed": self.seed,
            "replicates": {
                "requested": self.requested,
                "survived": self.survived,
                "extinct": self.extinct,
                "capped": self.capped,
            },
            "martingale": self.martingale,
            "growth_ratio": self.growth,
            "nerman": self.nerman,
            "exceedance": self.exceedance,
            "pendant_fraction": self.pendant_fraction,
            "max_law": self.max_law,
            "laplace": self.laplace,
            "slope": self.slope,
            "slope_table": self.slope_table,
        }


def _guard(fn, *args, **kwargs):
    """Evaluate an estimator, mapping statistical preconditions to ``None``."""
    try:
        return fn(*args, **kwargs)
    except (ValueError, ZeroDivisionError, RuntimeError):
        return None


def run_ensemble(
    model,
    profile: MalthusProfile,
    config: engine.SimulationConfig,
    replicates: int,
    analysis: Analysis | None = None,
    threads: int = 1,
    backend: str | None = None,
) -> EnsembleReport:
    if replicates < MIN_REPLICATES:
        raise ValueError(f"an ensemble needs at least {MIN_REPLICATES} replicates")
    analysis = analysis or Analysis()
    runs = engine.run_replicates(model, profile, config, replicates, threads, backend)
    usable = _usable(runs)
    survived = sum(r.survived for r in usable)
    capped = len(runs) - len(usable)
    if survived < MIN_SURVIVORS:
        raise TooFewSurvivors(
            f"only {survived} of {replicates} runs survived ({capped} capped)"
        )

    mm, mse = martingale_mean(usable)
    gr = _guard(growth_ratio, usable, profile) or (math.nan, math.nan)
    nerman = []
    for label, phi in config.characteristics.items():
        value, se = nerman_ratio(usable, profile, label)
        nerman.append({
            "label": label,
            "knots": [list(k) for k in phi.knots],
            "value": value,
            "se": se,
            "target": profile.nerman_mean(phi),
        })

    exceedance, fractions, max_law, laplace = [], [], {}, []
    if config.record_atoms:
        grid = [x for x in analysis.grid if x >= -config.window + 0.5]
        exceedance = intensity_test(usable, profile, grid)
        for x in analysis.grid:
            p, i = extremes.pooled_counts(usable, x)
            fractions.append({
                "x": float(x),
                "pendant": p,
                "interior": i,
                "fraction": p / (p + i) if p + i else None,
                "target": profile.slope,
            })
        for name, phi, psi in analysis.laplace_pairs:
            emp, lim, err, se = laplace_test(usable, profile, phi, psi)
            laplace.append({
                "name": name, "empirical": emp, "limiting": lim,
                "abs_error": err, "se": se,
            })
    dist = _guard(max_law_test, usable, profile, min_runs=analysis.max_law_min_runs)
    if dist is not None:
        max_law = {"pendant": dist[0], "interior": dist[1]}
    mp, mi = slope_estimates(usable)

    slope_table = []
    if analysis.horizons:
        by_t = {}
        for t in analysis.horizons:
            cfg = engine.SimulationConfig(
                horizon=t, window=config.window, edge_cap=config.edge_cap,
                seed=config.seed, record_atoms=False, order=config.order,
            )
            by_t[float(t)] = engine.run_replicates(model, profile, cfg, replicates, threads, backend)
        slope_table = _guard(slope_test, by_t, profile) or []

    return EnsembleReport(
        model=model.label,
        profile=profile.to_dict(),
        horizon=float(config.horizon),
        ell_t=profile.characteristic_length(config.horizon),
        seed=int(config.seed),
        backend=(backend or engine.kernel.BACKEND),
        requested=replicates,
        survived=survived,
        extinct=len(usable) - survived,
        capped=capped,
        martingale={"mean": mm, "se": mse, "target": 1.0},
        growth={"value": gr[0], "se": gr[1], "target": profile.growth_constant},
        nerman=nerman,
        exceedance=exceedance,
        pendant_fraction=fractions,
        max_law=max_law,
        laplace=laplace,
        slope={"mean_mp_over_t": mp, "mean_mi_over_t": mi, "target": profile.slope},
        slope_table=slope_table,
        runs=runs,
    )
