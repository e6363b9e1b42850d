"""Simulation of one branching tree up to a horizon.

:func:`run` streams the tree through the compiled (or fallback) kernel and
keeps only what the limit theorems talk about: counts, the Malthusian
martingale, the two longest-edge maxima and the edge lengths that land in the
observation window once recentred by the characteristic length.
:func:`run_naive` builds the full labelled tree recursively and derives the
same fields by enumeration; it exists as a reference oracle.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernel
from .errors import CapExceeded
from .functions import PiecewiseLinear
from .malthus import MalthusProfile
from .model import LifetimeOffspringModel
from .streams import CounterStream, child_key, root_key


class Status(str, Enum):
    SURVIVED = "survived"
    EXTINCT = "extinct"
    CAPPED = "capped"


_STATUS = {
    kernel.STATUS_SURVIVED: Status.SURVIVED,
    kernel.STATUS_EXTINCT: Status.EXTINCT,
    kernel.STATUS_CAPPED: Status.CAPPED,
}


class PointProcess:
    """Finite sorted multiset of atom positions."""

    __slots__ = ("atoms",)

    def __init__(self, atoms=()):
        arr = np.sort(np.asarray(atoms, dtype=float))
        arr.setflags(write=False)
        self.atoms = arr

    def __len__(self):
        return self.atoms.size

    def __iter__(self):
        return iter(self.atoms.tolist())

    def __eq__(self, other):
        if not isinstance(other, PointProcess):
            return NotImplemented
        return np.array_equal(self.atoms, other.atoms)

    def __repr__(self):
        return f"PointProcess(n={len(self)}, max={self.max()})"

    def max(self):
        """Largest atom, or ``None`` for the empty process (the -inf convention)."""
        return float(self.atoms[-1]) if self.atoms.size else None

    def count_at_least(self, x):
        """Number of atoms >= each entry of ``x``."""
        x = np.asarray(x, dtype=float)
        return self.atoms.size - np.searchsorted(self.atoms, x, side="left")

    def tolist(self):
        return self.atoms.tolist()


@dataclass
class SimulationConfig:
    horizon: float
    window: float = 3.0
    edge_cap: int = 10_000_000
    seed: int = 0
    record_atoms: bool = True
    characteristics: dict = field(default_factory=dict)
    # traversal order of the kernel; both orders give identical results
    order: str = "event"

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not self.window > 0:
            raise ValueError("window must be positive")
        if int(self.edge_cap) != self.edge_cap or self.edge_cap < 1:
            raise ValueError("edge_cap must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.order not in kernel.ORDERS:
            raise ValueError(f"order must be one of {sorted(kernel.ORDERS)}")
        for label, phi in self.characteristics.items():
            if not isinstance(phi, PiecewiseLinear):
                raise TypeError(f"characteristic {label!r} must be PiecewiseLinear")
            if not phi.is_nonnegative():
                raise ValueError(f"characteristic {label!r} must be nonnegative")


@dataclass(eq=True)
class RunResult:
    status: Status
    horizon: float
    ell: float
    n_alive: int
    n_born: int
    n_dead: int
    z_t: float
    m_pendant: float | None
    m_interior: float | None
    pendant_atoms: PointProcess
    interior_atoms: PointProcess
    census: dict
    replicate: int = 0
    window: float = 3.0

    @property
    def survived(self):
        return self.status is Status.SURVIVED

    @property
    def usable(self):
        """Capped runs are excluded from every statistic."""
        return self.status is not Status.CAPPED

    def to_dict(self):
        return {
            "replicate": self.replicate,
            "status": self.status.value,
            "horizon": self.horizon,
            "ell_t": self.ell,
            "n_alive": self.n_alive,
            "n_born": self.n_born,
            "n_dead": self.n_dead,
            "z_t": self.z_t,
            "m_pendant": self.m_pendant,
            "m_interior": self.m_interior,
            "pendant_atoms": self.pendant_atoms.tolist(),
            "interior_atoms": self.interior_atoms.tolist(),
            "census": dict(self.census),
            "window": self.window,
        }


def _none_if_nan(x):
    return None if math.isnan(x) else float(x)


def run(
    model: LifetimeOffspringModel,
    profile: MalthusProfile,
    config: SimulationConfig,
    replicate: int = 0,
    backend: str | None = None,
) -> RunResult:
    """Simulate replicate ``replicate`` of the tree up to ``config.horizon``."""
    impl = kernel.get(backend)
    t = float(config.horizon)
    ell = profile.characteristic_length(t)
    labels = list(config.characteristics)
    census_knots = [
        (config.characteristics[k].xs, config.characteristics[k].ys) for k in labels
    ]
    out = impl.simulate(
        model.kernel_spec(),
        float(profile.alpha),
        t,
        ell,
        float(config.window),
        int(config.edge_cap),
        root_key(int(config.seed), replicate),
        bool(config.record_atoms),
        census_knots,
        kernel.ORDERS[config.order],
    )
    status, n_born, n_alive, n_dead, z_t, max_age, max_int, pend, inter, cvals = out
    status = _STATUS[status]
    if status is Status.CAPPED:
        return RunResult(
            status, t, ell, 0, int(n_born), 0, 0.0, None, None,
            PointProcess(), PointProcess(), {}, replicate, float(config.window),
        )
    return RunResult(
        status=status,
        horizon=t,
        ell=ell,
        n_alive=int(n_alive),
        n_born=int(n_born),
        n_dead=int(n_dead),
        z_t=float(z_t),
        m_pendant=_none_if_nan(max_age),
        m_interior=_none_if_nan(max_int),
        pendant_atoms=PointProcess(pend),
        interior_atoms=PointProcess(inter),
        census=dict(zip(labels, map(float, cvals))),
        replicate=replicate,
        window=float(config.window),
    )


def run_replicates(model, profile, config, replicates, threads=1, backend=None, start=0):
    """Run replicates ``start .. start + replicates - 1``, ordered by index."""
    indices = range(start, start + replicates)
    if threads <= 1:
        return [run(model, profile, config, i, backend) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run(model, profile, config, i, backend), indices))


def census(ages, phi: PiecewiseLinear) -> float:
    """Z_t^phi: sum of ``phi(age)`` over the alive individuals' ages."""
    return math.fsum(phi(a) for a in ages)


def run_naive(
    model: LifetimeOffspringModel,
    profile: MalthusProfile,
    config: SimulationConfig,
    replicate: int = 0,
) -> RunResult:
    """Reference simulator: recursive construction of the labelled tree.

    Each individual is an Ulam-Harris word; its (T, L) pair is drawn from the
    counter stream of its own key, so the tree matches :func:`run` exactly.
    Only suitable for small trees.
    """
    t = float(config.horizon)
    ell = profile.characteristic_length(t)
    cap = int(config.edge_cap)
    alive = []  # (label, b, d, L)
    dead = []  # (label, b, d)

    def grow(label, key, b):
        if len(alive) + len(dead) >= cap:
            raise CapExceeded(f"more than {cap} individuals born before {t}")
        life, n_children = model.sample_pair(CounterStream(key))
        d = b + life
        if d > t:
            alive.append((label, b, d, n_children))
            return
        dead.append((label, b, d))
        for i in range(n_children):
            grow(label + (i + 1,), child_key(key, i), d)

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 100_000))
    try:
        grow((), root_key(int(config.seed), replicate), 0.0)
    finally:
        sys.setrecursionlimit(limit)

    ages = [t - b for _, b, _, _ in alive]
    lengths = [d - b for _, b, d in dead]
    window = float(config.window)
    if config.record_atoms:
        pendant = [a - ell for a in ages if a - ell >= -window]
        interior = [x - ell for x in lengths if x - ell >= -window]
    else:
        pendant = interior = []
    return RunResult(
        status=Status.SURVIVED if alive else Status.EXTINCT,
        horizon=t,
        ell=ell,
        n_alive=len(alive),
        n_born=len(alive) + len(dead),
        n_dead=len(dead),
        z_t=math.fsum(n * math.exp(-profile.alpha * d) for _, _, d, n in alive),
        m_pendant=max(ages) if ages else None,
        m_interior=max(lengths) if lengths else None,
        pendant_atoms=PointProcess(pendant),
        interior_atoms=PointProcess(interior),
        census={k: census(ages, phi) for k, phi in config.characteristics.items()},
        replicate=replicate,
        window=window,
    )
