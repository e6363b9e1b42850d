import numpy as np
import pytest

from branchscope import extremes
from branchscope.engine import PointProcess, RunResult, Status
from branchscope.errors import GridBelowWindow, NoAtoms


def fake_run(pendant, interior, ell=5.0, m_p=None, m_i=None, replicate=0):
    return RunResult(
        Status.SURVIVED, 10.0, ell, len(pendant), len(pendant) + len(interior), len(interior), 1.0,
        m_p, m_i, PointProcess(pendant), PointProcess(interior), {}, replicate, 3.0,
    )


def test_exceedance_counts():
    r = fake_run([-1.0, 0.0, 0.5], [-2.0, 1.0])
    curve = extremes.exceedance(r, [-1.0, 0.0, 1.0])
    assert list(curve.pendant_counts) == [3, 2, 0]
    assert list(curve.interior_counts) == [1, 1, 1]


def test_exceedance_grid_checks():
    r = fake_run([], [])
    with pytest.raises(GridBelowWindow):
        extremes.exceedance(r, [-3.5, 0.0])
    with pytest.raises(ValueError):
        extremes.exceedance(r, [1.0, 0.0])


def test_recentred_maxima():
    assert extremes.recentred_maxima(fake_run([], [], ell=2.0, m_p=3.5, m_i=None)) == (1.5, None)


def test_pooled_counts_and_fraction():
    runs = [fake_run([0.1, 0.2], [0.3]), fake_run([-0.5], [0.0, 2.0])]
    assert extremes.pooled_counts(runs, 0.0) == (2, 3)
    assert extremes.pendant_fraction(runs, 0.0) == 0.4
    with pytest.raises(NoAtoms):
        extremes.pendant_fraction(runs, 5.0)


def test_pooled_identity_on_simulated_runs(models, profiles):
    from branchscope.engine import SimulationConfig, run_replicates

    runs = run_replicates(models["exp"], profiles["exp"], SimulationConfig(horizon=6.0, seed=2), 50)
    grid = np.array([-1.0, 0.0, 1.0])
    curves = [extremes.exceedance(r, grid) for r in runs]
    for j, x in enumerate(grid):
        p, i = extremes.pooled_counts(runs, x)
        assert p == sum(c.pendant_counts[j] for c in curves)
        assert i == sum(c.interior_counts[j] for c in curves)
