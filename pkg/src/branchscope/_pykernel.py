"""Pure-Python simulation kernel.

Selected when the compiled extension is unavailable (or BRANCHSCOPE_PURE=1).
Produces bitwise the same output as ``_ckernel``: floating-point expressions
are written in the same order, sums over alive individuals are exactly
rounded (``math.fsum``) and randomness comes from per-individual counter
streams.
"""

from __future__ import annotations

import bisect
import heapq
import math

import numpy as np

from .streams import child_key, draw

STATUS_SURVIVED, STATUS_EXTINCT, STATUS_CAPPED = 0, 1, 2
ORDER_EVENT, ORDER_DEPTH = 0, 1

BACKEND = "python"


def draw_pair(spec, key):
    """Draw (T, L) for the individual keyed ``key`` under a kernel spec."""
    family, p1, p2, off, k, q = spec
    u = draw(key, 0)
    if family == 1:
        t = math.expm1(-math.log(u) / p1)
    else:
        t = -math.log(u) / p1
    if family == 2:
        budget = p2 * t
        if budget <= 0.0:
            return t, 1
        n = 0
        j = 1
        s = -math.log(draw(key, j))
        while s <= budget:
            n += 1
            j += 1
            s += -math.log(draw(key, j))
        return t, 1 + n
    if off == 0:
        return t, k
    if off == 1:
        return t, (0 if draw(key, 1) < q else k)
    return t, int(math.floor(math.log(draw(key, 1)) / math.log(q)))


def _census_value(xs, ys, a):
    if a <= xs[0]:
        return ys[0]
    if a >= xs[-1]:
        return ys[-1]
    i = bisect.bisect_right(xs, a) - 1
    return ys[i] + (ys[i + 1] - ys[i]) * ((a - xs[i]) / (xs[i + 1] - xs[i]))


def simulate(spec, alpha, horizon, ell, window, cap, key, record_atoms, census, order):
    """Simulate one tree up to ``horizon``.

    Returns ``(status, n_born, n_alive, n_dead, z_t, max_age, max_interior,
    pendant_positions, interior_positions, census_values)``; ``max_age`` and
    ``max_interior`` are NaN when undefined.
    """
    census = [(list(map(float, xs)), list(map(float, ys))) for xs, ys in census]
    alive = []  # (b, d, L)
    interior = []
    n_dead = 0
    max_interior = math.nan
    n_born = 1

    def dead(b, d):
        nonlocal n_dead, max_interior
        n_dead += 1
        length = d - b
        if not length <= max_interior:
            max_interior = length
        if record_atoms:
            pos = length - ell
            if pos >= -window:
                interior.append(pos)

    capped = False
    if order == ORDER_EVENT:
        t0, l0 = draw_pair(spec, key)
        heap = [(t0, 0, 0.0, l0, key)]
        seq = 1
        if n_born > cap:
            capped = True
        while not capped and heap and heap[0][0] <= horizon:
            d, _, b, nl, k = heapq.heappop(heap)
            dead(b, d)
            for i in range(nl):
                ck = child_key(k, i)
                t, l = draw_pair(spec, ck)
                n_born += 1
                if n_born > cap:
                    capped = True
                    break
                heapq.heappush(heap, (d + t, seq, d, l, ck))
                seq += 1
        if not capped:
            alive = [(b, d, nl) for d, _, b, nl, _ in heap]
    else:
        stack = [(key, 0.0)]
        if n_born > cap:
            capped = True
        while stack and not capped:
            k, b = stack.pop()
            t, nl = draw_pair(spec, k)
            d = b + t
            if d > horizon:
                alive.append((b, d, nl))
                continue
            dead(b, d)
            n_born += nl
            if n_born > cap:
                capped = True
                break
            for i in range(nl - 1, -1, -1):
                stack.append((child_key(k, i), d))

    empty = np.empty(0)
    if capped:
        return (STATUS_CAPPED, n_born, 0, 0, 0.0, math.nan, math.nan, empty, empty,
                [0.0] * len(census))

    zterms = []
    pendant = []
    max_age = math.nan
    cvals = [[] for _ in census]
    for b, d, nl in alive:
        age = horizon - b
        if not age <= max_age:
            max_age = age
        zterms.append(nl * math.exp(-alpha * d))
        for acc, (xs, ys) in zip(cvals, census):
            acc.append(_census_value(xs, ys, age))
        if record_atoms:
            pos = age - ell
            if pos >= -window:
                pendant.append(pos)
    status = STATUS_SURVIVED if alive else STATUS_EXTINCT
    return (
        status,
        n_born,
        len(alive),
        n_dead,
        math.fsum(zterms),
        max_age,
        max_interior,
        np.array(pendant, dtype=float),
        np.array(interior, dtype=float),
        [math.fsum(v) for v in cvals],
    )


def sample_pairs(spec, n, key):
    """``n`` independent draws; draw ``i`` uses the ``i``-th child key of ``key``."""
    ts = np.empty(n)
    ls = np.empty(n, dtype=np.int64)
    for i in range(n):
        ts[i], ls[i] = draw_pair(spec, child_key(key, i))
    return ts, ls
