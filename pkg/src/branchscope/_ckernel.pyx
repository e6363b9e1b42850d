# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernel; mirrors _pykernel.py bit for bit.

No fast-math: the floating-point expressions below must round exactly as
their Python counterparts do.
"""

from libc.math cimport log, exp, expm1, floor, fabs, NAN
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy, memset

import numpy as np

cdef extern from *:
    """
    #define BS_GOLDEN 0x9E3779B97F4A7C15ULL
    #define BS_CHILD 0xD1B54A32D192ED03ULL
    #define BS_M1 0xBF58476D1CE4E5B9ULL
    #define BS_M2 0x94D049BB133111EBULL
    #define BS_LOW32 0xFFFFFFFFULL
    #define BS_FRAC52 0xFFFFFFFFFFFFFULL
    """
    const uint64_t GOLDEN "BS_GOLDEN"
    const uint64_t CHILD "BS_CHILD"
    const uint64_t M1 "BS_M1"
    const uint64_t M2 "BS_M2"
    const uint64_t LOW32 "BS_LOW32"
    const uint64_t FRAC52 "BS_FRAC52"

BACKEND = "cython"

STATUS_SURVIVED = 0
STATUS_EXTINCT = 1
STATUS_CAPPED = 2


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>M1
    z = (z ^ (z >> 27)) * <uint64_t>M2
    return z ^ (z >> 31)


cdef inline double draw(uint64_t key, uint64_t j) noexcept nogil:
    cdef uint64_t bits = mix64(key + (j + 1) * <uint64_t>GOLDEN)
    return (<double>(bits >> 12) + 0.5) * 2.220446049250313e-16


cdef inline uint64_t child_key(uint64_t key, uint64_t i) noexcept nogil:
    return mix64(key ^ ((i + 1) * <uint64_t>CHILD))


cdef struct Spec:
    int family
    double p1
    double p2
    int off
    int64_t k
    double q
    double log_q


cdef inline void draw_pair(const Spec* s, uint64_t key, double* t_out, int64_t* l_out) noexcept nogil:
    cdef double u = draw(key, 0)
    cdef double t, budget, acc
    cdef int64_t n
    cdef uint64_t j
    if s.family == 1:
        t = expm1(-log(u) / s.p1)
    else:
        t = -log(u) / s.p1
    t_out[0] = t
    if s.family == 2:
        budget = s.p2 * t
        if budget <= 0.0:
            l_out[0] = 1
            return
        n = 0
        j = 1
        acc = -log(draw(key, j))
        while acc <= budget:
            n += 1
            j += 1
            acc += -log(draw(key, j))
        l_out[0] = 1 + n
    elif s.off == 0:
        l_out[0] = s.k
    elif s.off == 1:
        l_out[0] = 0 if draw(key, 1) < s.q else s.k
    else:
        l_out[0] = <int64_t>floor(log(draw(key, 1)) / s.log_q)


# ---------------------------------------------------------------------------
# exact summation of nonnegative doubles
#
# Each term m * 2^(s - 1075) is added into integer bin s; carries are pushed
# 32 bins up every 1024 additions so no bin can overflow.  The exact
# total is rounded once, in Python, by correctly rounded int division, which
# gives the same double as math.fsum.

cdef struct Acc:
    uint64_t bins[2112]
    int lo
    int hi
    int count


cdef inline void acc_init(Acc* a) noexcept nogil:
    memset(a.bins, 0, sizeof(a.bins))
    a.lo = 2112
    a.hi = -1
    a.count = 0


cdef void acc_carry(Acc* a) noexcept nogil:
    cdef int s = a.lo
    cdef uint64_t c
    while s <= a.hi:
        c = a.bins[s] >> 32
        if c and s + 32 < 2112:
            a.bins[s] &= LOW32
            a.bins[s + 32] += c
            if s + 32 > a.hi:
                a.hi = s + 32
        s += 1
    a.count = 0


cdef inline void acc_add(Acc* a, double x) noexcept nogil:
    cdef uint64_t u, m
    cdef int e
    if x == 0.0:
        return
    memcpy(&u, &x, sizeof(double))
    e = <int>((u >> 52) & 0x7FF)
    m = u & FRAC52
    if e == 0:
        e = 1
    else:
        m |= (<uint64_t>1) << 52
    a.bins[e] += m
    if e < a.lo:
        a.lo = e
    if e > a.hi:
        a.hi = e
    a.count += 1
    if a.count >= 1024:
        acc_carry(a)


cdef object acc_result(Acc* a):
    cdef int s
    total = 0
    for s in range(a.lo, a.hi + 1):
        if a.bins[s]:
            total += int(a.bins[s]) << (s - 1)
    if total == 0:
        return 0.0
    return total / _TWO_1074


_TWO_1074 = 1 << 1074


# ---------------------------------------------------------------------------
# growable buffers

cdef struct Ind:
    double d
    double b
    uint64_t key
    int64_t seq
    int64_t L


cdef struct Heap:
    Ind* data
    Py_ssize_t n
    Py_ssize_t cap


cdef inline bint ind_less(const Ind* x, const Ind* y) noexcept nogil:
    return x.d < y.d or (x.d == y.d and x.seq < y.seq)


cdef int heap_push(Heap* h, Ind item) noexcept nogil:
    cdef Ind* grown
    cdef Py_ssize_t i, parent
    if h.n == h.cap:
        h.cap = h.cap * 2 if h.cap else 1024
        grown = <Ind*>realloc(h.data, h.cap * sizeof(Ind))
        if grown == NULL:
            return -1
        h.data = grown
    i = h.n
    h.n += 1
    while i > 0:
        parent = (i - 1) >> 1
        if ind_less(&item, &h.data[parent]):
            h.data[i] = h.data[parent]
            i = parent
        else:
            break
    h.data[i] = item
    return 0


cdef Ind heap_pop(Heap* h) noexcept nogil:
    cdef Ind top = h.data[0]
    cdef Ind last
    cdef Py_ssize_t i = 0, c
    h.n -= 1
    if h.n == 0:
        return top
    last = h.data[h.n]
    while True:
        c = 2 * i + 1
        if c >= h.n:
            break
        if c + 1 < h.n and ind_less(&h.data[c + 1], &h.data[c]):
            c += 1
        if ind_less(&h.data[c], &last):
            h.data[i] = h.data[c]
            i = c
        else:
            break
    h.data[i] = last
    return top


cdef struct DBuf:
    double* data
    Py_ssize_t n
    Py_ssize_t cap


cdef int dbuf_push(DBuf* v, double x) noexcept nogil:
    cdef double* grown
    if v.n == v.cap:
        v.cap = v.cap * 2 if v.cap else 256
        grown = <double*>realloc(v.data, v.cap * sizeof(double))
        if grown == NULL:
            return -1
        v.data = grown
    v.data[v.n] = x
    v.n += 1
    return 0


cdef struct Frame:
    uint64_t key
    double b


cdef struct Stack:
    Frame* data
    Py_ssize_t n
    Py_ssize_t cap


cdef int stack_push(Stack* s, uint64_t key, double b) noexcept nogil:
    cdef Frame* grown
    if s.n == s.cap:
        s.cap = s.cap * 2 if s.cap else 256
        grown = <Frame*>realloc(s.data, s.cap * sizeof(Frame))
        if grown == NULL:
            return -1
        s.data = grown
    s.data[s.n].key = key
    s.data[s.n].b = b
    s.n += 1
    return 0


# ---------------------------------------------------------------------------
# run state

cdef struct State:
    double alpha
    double horizon
    double ell
    double window
    bint record
    int64_t n_alive
    int64_t n_dead
    double max_age
    double max_interior
    Acc z
    int n_census
    const double* knots_x
    const double* knots_y
    const Py_ssize_t* offsets
    Acc* census
    DBuf pendant
    DBuf interior


cdef inline double census_value(const double* xs, const double* ys, Py_ssize_t m, double a) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid
    if a <= xs[0]:
        return ys[0]
    if a >= xs[m - 1]:
        return ys[m - 1]
    # largest i with xs[i] <= a
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if xs[mid] <= a:
            lo = mid
        else:
            hi = mid
    return ys[lo] + (ys[lo + 1] - ys[lo]) * ((a - xs[lo]) / (xs[lo + 1] - xs[lo]))


cdef inline int on_dead(State* st, double b, double d) noexcept nogil:
    cdef double length = d - b
    cdef double pos
    st.n_dead += 1
    if not (length <= st.max_interior):
        st.max_interior = length
    if st.record:
        pos = length - st.ell
        if pos >= -st.window:
            return dbuf_push(&st.interior, pos)
    return 0


cdef inline int on_alive(State* st, double b, double d, int64_t L) noexcept nogil:
    cdef double age = st.horizon - b
    cdef double pos
    cdef int c
    cdef Py_ssize_t o
    st.n_alive += 1
    if not (age <= st.max_age):
        st.max_age = age
    acc_add(&st.z, <double>L * exp(-st.alpha * d))
    for c in range(st.n_census):
        o = st.offsets[c]
        acc_add(&st.census[c], census_value(&st.knots_x[o], &st.knots_y[o],
                                            st.offsets[c + 1] - o, age))
    if st.record:
        pos = age - st.ell
        if pos >= -st.window:
            return dbuf_push(&st.pendant, pos)
    return 0


cdef int run_event(const Spec* spec, State* st, uint64_t key, int64_t cap, int64_t* n_born) noexcept nogil:
    """0 ok, 1 capped, -1 out of memory."""
    cdef Heap h
    cdef Ind item, top
    cdef double t
    cdef int64_t l, i, seq = 0
    cdef int rc = 0
    h.data = NULL
    h.n = 0
    h.cap = 0
    draw_pair(spec, key, &t, &l)
    item.d = t
    item.b = 0.0
    item.key = key
    item.seq = seq
    item.L = l
    seq += 1
    n_born[0] = 1
    if n_born[0] > cap:
        return 1
    if heap_push(&h, item) != 0:
        return -1
    while h.n > 0 and h.data[0].d <= st.horizon:
        top = heap_pop(&h)
        if on_dead(st, top.b, top.d) != 0:
            rc = -1
            break
        for i in range(top.L):
            item.key = child_key(top.key, <uint64_t>i)
            draw_pair(spec, item.key, &t, &l)
            n_born[0] += 1
            if n_born[0] > cap:
                rc = 1
                break
            item.d = top.d + t
            item.b = top.d
            item.seq = seq
            item.L = l
            seq += 1
            if heap_push(&h, item) != 0:
                rc = -1
                break
        if rc != 0:
            break
    if rc == 0:
        for i in range(h.n):
            if on_alive(st, h.data[i].b, h.data[i].d, h.data[i].L) != 0:
                rc = -1
                break
    free(h.data)
    return rc


cdef int run_depth(const Spec* spec, State* st, uint64_t key, int64_t cap, int64_t* n_born) noexcept nogil:
    cdef Stack s
    cdef Frame f
    cdef double t, d
    cdef int64_t l, i
    cdef int rc = 0
    s.data = NULL
    s.n = 0
    s.cap = 0
    n_born[0] = 1
    if n_born[0] > cap:
        return 1
    if stack_push(&s, key, 0.0) != 0:
        return -1
    while s.n > 0:
        s.n -= 1
        f = s.data[s.n]
        draw_pair(spec, f.key, &t, &l)
        d = f.b + t
        if d > st.horizon:
            if on_alive(st, f.b, d, l) != 0:
                rc = -1
                break
            continue
        if on_dead(st, f.b, d) != 0:
            rc = -1
            break
        n_born[0] += l
        if n_born[0] > cap:
            rc = 1
            break
        i = l - 1
        while i >= 0:
            if stack_push(&s, child_key(f.key, <uint64_t>i), d) != 0:
                rc = -1
                break
            i -= 1
        if rc != 0:
            break
    free(s.data)
    return rc


cdef Spec make_spec(spec):
    cdef Spec s
    family, p1, p2, off, k, q = spec
    s.family = family
    s.p1 = p1
    s.p2 = p2
    s.off = off
    s.k = k
    s.q = q
    s.log_q = log(q) if off == 2 else 0.0
    return s


def simulate(spec, double alpha, double horizon, double ell, double window,
             long long cap, key, bint record_atoms, census, int order):
    """See _pykernel.simulate."""
    cdef Spec s = make_spec(spec)
    cdef State st
    cdef uint64_t ukey = <uint64_t>int(key)
    cdef int64_t n_born = 0
    cdef int rc, c
    cdef Py_ssize_t total = 0, j, m
    cdef double[::1] kx, ky
    cdef double[::1] out_p, out_i
    cdef Py_ssize_t[::1] offs

    census = [(np.ascontiguousarray(xs, dtype=np.float64),
               np.ascontiguousarray(ys, dtype=np.float64)) for xs, ys in census]
    offsets = np.zeros(len(census) + 1, dtype=np.intp)
    for c in range(len(census)):
        offsets[c + 1] = offsets[c] + len(census[c][0])
    total = offsets[len(census)]
    kx = np.empty(max(total, 1))
    ky = np.empty(max(total, 1))
    for c in range(len(census)):
        m = offsets[c]
        for j in range(len(census[c][0])):
            kx[m + j] = census[c][0][j]
            ky[m + j] = census[c][1][j]
    offs = offsets

    st.alpha = alpha
    st.horizon = horizon
    st.ell = ell
    st.window = window
    st.record = record_atoms
    st.n_alive = 0
    st.n_dead = 0
    st.max_age = NAN
    st.max_interior = NAN
    acc_init(&st.z)
    st.n_census = len(census)
    st.knots_x = &kx[0]
    st.knots_y = &ky[0]
    st.offsets = &offs[0]
    st.census = <Acc*>malloc(max(st.n_census, 1) * sizeof(Acc))
    if st.census == NULL:
        raise MemoryError()
    for c in range(st.n_census):
        acc_init(&st.census[c])
    st.pendant.data = NULL
    st.pendant.n = 0
    st.pendant.cap = 0
    st.interior.data = NULL
    st.interior.n = 0
    st.interior.cap = 0

    with nogil:
        if order == 0:
            rc = run_event(&s, &st, ukey, cap, &n_born)
        else:
            rc = run_depth(&s, &st, ukey, cap, &n_born)

    try:
        if rc < 0:
            raise MemoryError("simulation buffers exhausted memory")
        if rc == 1:
            return (STATUS_CAPPED, n_born, 0, 0, 0.0, NAN, NAN,
                    np.empty(0), np.empty(0), [0.0] * st.n_census)
        pendant = np.empty(st.pendant.n)
        interior = np.empty(st.interior.n)
        out_p = pendant
        out_i = interior
        if st.pendant.n:
            memcpy(&out_p[0], st.pendant.data, st.pendant.n * sizeof(double))
        if st.interior.n:
            memcpy(&out_i[0], st.interior.data, st.interior.n * sizeof(double))
        cvals = [acc_result(&st.census[c]) for c in range(st.n_census)]
        status = STATUS_SURVIVED if st.n_alive > 0 else STATUS_EXTINCT
        return (status, n_born, st.n_alive, st.n_dead, acc_result(&st.z),
                st.max_age, st.max_interior, pendant, interior, cvals)
    finally:
        free(st.pendant.data)
        free(st.interior.data)
        free(st.census)


def sample_pairs(spec, Py_ssize_t n, key):
    """See _pykernel.sample_pairs."""
    cdef Spec s = make_spec(spec)
    cdef uint64_t ukey = <uint64_t>int(key)
    cdef Py_ssize_t i
    ts = np.empty(n)
    ls = np.empty(n, dtype=np.int64)
    cdef double[::1] tv = ts
    cdef int64_t[::1] lv = ls
    with nogil:
        for i in range(n):
            draw_pair(&s, child_key(ukey, <uint64_t>i), &tv[i], &lv[i])
    return ts, ls
