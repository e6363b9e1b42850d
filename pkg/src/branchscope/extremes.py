"""Per-run transformations of the recentred edge-length point processes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridBelowWindow, NoAtoms


@dataclass(frozen=True)
class ExceedanceCurve:
    """Counts of atoms at or above each grid point, for one run."""

    grid: np.ndarray
    pendant_counts: np.ndarray
    interior_counts: np.ndarray


def _check_grid(grid, window):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1:
        raise ValueError("grid must be one-dimensional")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    if grid.size and grid[0] < -window:
        raise GridBelowWindow(f"grid point {grid[0]} lies below the window bound {-window}")
    return grid


def exceedance(run, grid) -> ExceedanceCurve:
    grid = _check_grid(grid, run.window)
    return ExceedanceCurve(
        grid,
        run.pendant_atoms.count_at_least(grid),
        run.interior_atoms.count_at_least(grid),
    )


def recentred_maxima(run):
    """(M^p_t - l_t, M^i_t - l_t); ``None`` stands for -inf."""
    mp = None if run.m_pendant is None else run.m_pendant - run.ell
    mi = None if run.m_interior is None else run.m_interior - run.ell
    return mp, mi


def pooled_counts(runs, x):
    """Total pendant and interior atoms >= ``x`` across ``runs``."""
    p = sum(int(r.pendant_atoms.count_at_least(x)) for r in runs)
    i = sum(int(r.interior_atoms.count_at_least(x)) for r in runs)
    return p, i


def pendant_fraction(runs, x) -> float:
    """Fraction of pooled atoms at or above ``x`` that are pendant."""
    p, i = pooled_counts(runs, x)
    if p + i == 0:
        raise NoAtoms(f"no atoms at or above {x}")
    return p / (p + i)
