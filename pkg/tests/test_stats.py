import math

import numpy as np
import pytest

from branchscope import stats
from branchscope.engine import SimulationConfig, run_replicates
from branchscope.errors import MissingCensus, TooFewSurvivors, ZeroZ
from branchscope.functions import PiecewiseLinear
from branchscope.malthus import INTERIOR, PENDANT

RAMP = PiecewiseLinear.ramp()
ZERO = PiecewiseLinear.constant(0.0)
MIN1 = PiecewiseLinear.from_knots([(0.0, 0.0), (1.0, 1.0)])


@pytest.fixture(scope="module")
def yule(models, profiles):
    c = SimulationConfig(horizon=7.0, seed=5, order="depth", characteristics={"min1": MIN1})
    return models["exp"], profiles["exp"], c


@pytest.fixture(scope="module")
def report(yule):
    m, p, c = yule
    analysis = stats.Analysis(laplace_pairs=[("ramp", RAMP, RAMP), ("zero", ZERO, ZERO)], max_law_min_runs=300)
    return stats.run_ensemble(m, p, c, 600, analysis)


def test_ratio_of_means_oracle():
    rng = np.random.default_rng(1)
    x = rng.exponential(size=5000)
    y = 3.0 * x + rng.normal(scale=0.1, size=5000)
    r, se = stats.ratio_of_means(y, x)
    assert r == pytest.approx(y.mean() / x.mean())
    # bootstrap oracle for the standard error
    idx = rng.integers(0, 5000, size=(400, 5000))
    boot = y[idx].mean(axis=1) / x[idx].mean(axis=1)
    assert se == pytest.approx(boot.std(ddof=1), rel=0.2)
    with pytest.raises(ZeroZ):
        stats.ratio_of_means([1.0], [0.0])


def test_report_invariants(report):
    assert report.survived + report.extinct + report.capped == report.requested == 600
    d = report.to_dict()
    assert d["martingale"]["se"] >= 0 and d["growth_ratio"]["se"] >= 0
    assert all(row[f"{k}_se"] >= 0 for row in d["exceedance"] for k in (PENDANT, INTERIOR))
    assert set(d["max_law"]) == {"pendant", "interior"}
    assert d["laplace"][1]["empirical"] == 1.0 and d["laplace"][1]["limiting"] == 1.0


def test_report_statistics_reasonable(report, profiles):
    p = profiles["exp"]
    assert abs(report.martingale["mean"] - 1.0) <= 4 * report.martingale["se"]
    assert report.growth["value"] == pytest.approx(p.growth_constant, rel=0.05)
    n = report.nerman[0]
    assert n["target"] == pytest.approx(p.nerman_mean(MIN1))
    assert n["value"] == pytest.approx(n["target"], rel=0.07)


def test_report_deterministic(yule, report):
    m, p, c = yule
    again = stats.run_ensemble(m, p, c, 600, stats.Analysis(
        laplace_pairs=[("ramp", RAMP, RAMP), ("zero", ZERO, ZERO)], max_law_min_runs=300), threads=3)
    from branchscope import formats

    assert formats.dumps(again.to_dict()) == formats.dumps(report.to_dict())


def test_exceedance_table_matches_pooled_counts(report):
    from branchscope import extremes

    usable = [r for r in report.runs if r.usable]
    for row in report.exceedance:
        p, i = extremes.pooled_counts(usable, row["x"])
        assert (row["pendant_pooled"], row["interior_pooled"]) == (p, i)
        zbar = np.mean([r.z_t for r in usable])
        assert row["pendant"] == pytest.approx(p / len(usable) / zbar, rel=1e-12)


def test_targets_come_from_profile(report, profiles):
    p = profiles["exp"]
    for row in report.exceedance:
        assert row["pendant_target"] == p.limiting_exceedance(PENDANT, row["x"])
        assert row["interior_target"] == p.limiting_exceedance(INTERIOR, row["x"])
    assert report.slope["target"] == p.slope


def test_minimum_replicates(yule):
    m, p, c = yule
    with pytest.raises(ValueError):
        stats.run_ensemble(m, p, c, 99)


def test_too_few_survivors(models, profiles):
    c = SimulationConfig(horizon=3.0, seed=1, edge_cap=5)
    with pytest.raises(TooFewSurvivors):
        stats.run_ensemble(models["exp"], profiles["exp"], c, 100)


def test_capped_runs_counted(models, profiles):
    c = SimulationConfig(horizon=4.0, seed=1, edge_cap=200)
    rep = stats.run_ensemble(models["exp"], profiles["exp"], c, 200)
    assert rep.capped > 0 and rep.survived >= 50
    assert rep.survived + rep.extinct + rep.capped == 200


def test_growth_ratio_errors(models, profiles, yule):
    m, p, c = yule
    runs = run_replicates(m, p, c, 60)
    with pytest.raises(TooFewSurvivors):
        stats.growth_ratio(runs[:10], p)
    dead = [r for r in run_replicates(models["pareto_geometric"], profiles["pareto_geometric"],
                                      SimulationConfig(horizon=3.0, seed=4), 300) if not r.survived]
    assert len(dead) > 50
    with pytest.raises(ZeroZ):
        stats.intensity_test(dead, profiles["pareto_geometric"], [0.0])
    with pytest.raises(MissingCensus):
        stats.nerman_ratio(runs, p, "absent")


def test_nerman_zero_characteristic(models, profiles):
    c = SimulationConfig(horizon=4.0, seed=1, characteristics={"zero": ZERO})
    runs = run_replicates(models["exp"], profiles["exp"], c, 60)
    assert stats.nerman_ratio(runs, profiles["exp"], "zero") == (0.0, 0.0)


def test_max_law_degenerate(models, profiles):
    runs = [r for r in run_replicates(models["pareto_geometric"], profiles["pareto_geometric"],
                                      SimulationConfig(horizon=2.0, seed=4), 400) if not r.survived]
    # all runs extinct: every Z_t is 0, so the limiting CDF is 1 and no
    # pendant edge exists; interior edges of the dead individuals remain
    assert all(r.z_t == 0.0 for r in runs)
    dp, _ = stats.max_law_test(runs, profiles["pareto_geometric"], min_runs=1)
    assert dp == 0.0


def test_max_law_min_runs(yule):
    m, p, c = yule
    with pytest.raises(ValueError):
        stats.max_law_test(run_replicates(m, p, c, 20), p)


def test_laplace_swap_symmetry(report, profiles, yule):
    m, p, c = yule
    usable = [r for r in report.runs if r.usable]
    a = stats.laplace_test(usable, p, RAMP, ZERO)
    b = stats.laplace_test(usable, p, ZERO, RAMP)
    assert a[1] == pytest.approx(b[1], abs=1e-15)
    assert abs(a[0] - b[0]) <= 2 * math.hypot(a[3], b[3])


def test_intensity_grid_guard(report, profiles):
    with pytest.raises(ValueError):
        stats.intensity_test(report.runs, profiles["exp"], [-2.8])


def test_slope_test(models, profiles):
    m, p = models["exp"], profiles["exp"]
    by_t = {t: run_replicates(m, p, SimulationConfig(horizon=t, seed=3, record_atoms=False), 100) for t in (3.0, 4.0, 5.0)}
    rows = stats.slope_test(by_t, p)
    assert [r["t"] for r in rows] == [3.0, 4.0, 5.0]
    assert all(abs(r["mean_mp_over_t"] - 0.5) < 0.2 for r in rows)
    with pytest.raises(ValueError):
        stats.slope_test({3.0: by_t[3.0]}, p)


def test_non_increasing():
    assert stats.non_increasing([3, 2, 2, 1])
    assert not stats.non_increasing([3, 4])


def test_empirical_max_cdf():
    assert stats.empirical_max_cdf([None, 0.5, 1.5], 1.0) == pytest.approx(2 / 3)
