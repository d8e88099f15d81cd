# cython: language_level=3
"""Compiled simulation kernels.

Same contract as ``_pykernel``: pre-drawn integer arrays in, integer
aggregates out, bit-identical results.  These walk the queue slot by
slot; the pure-python module collapses the green phase analytically.
"""

import numpy as np

cimport numpy as cnp

ctypedef cnp.int64_t i64


def standard_batch(object state, i64[:, ::1] arr, int g, int r,
                   i64[::1] over_hist, i64[::1] sog_hist, i64[::1] green_hist,
                   i64[:, ::1] delay_hist, i64[::1] slot_sums, i64[::1] scal):
    cdef Py_ssize_t n_cyc = arr.shape[0]
    cdef long long c = g + r
    cdef long long cap = over_hist.shape[0] - 1
    cdef long long dcap = delay_hist.shape[1] - 1
    cdef long long s = state
    cdef long long x, a, nst, j, over, wraps, d, gcount
    cdef long long xsum = 0, x2 = 0, passed = 0, atot = 0
    cdef Py_ssize_t i, u
    cdef long long k
    for i in range(n_cyc):
        if s <= cap:
            sog_hist[s] += 1
        else:
            sog_hist[cap] += 1
        gcount = 0
        for k in range(1, g + 1):
            nst = s
            slot_sums[k - 1] += nst
            a = arr[i, k - 1]
            atot += a
            if nst > 0:
                gcount += 1
                for u in range(a):
                    j = nst + u
                    over = j - (g - k)
                    if over > 0:
                        wraps = (over + g - 1) // g
                        d = j + r * wraps
                    else:
                        d = j
                    if d > dcap:
                        d = dcap
                    delay_hist[k - 1, d] += 1
                s = nst - 1 + a
            else:
                passed += a
                delay_hist[k - 1, 0] += a
        x = s
        if x <= cap:
            over_hist[x] += 1
        else:
            over_hist[cap] += 1
        xsum += x
        x2 += x * x
        green_hist[gcount] += 1
        for k in range(g + 1, c + 1):
            nst = s
            slot_sums[k - 1] += nst
            a = arr[i, k - 1]
            atot += a
            for u in range(a):
                j = nst + u + 1
                wraps = (j + g - 1) // g
                d = (c - k) + j + (wraps - 1) * r
                if d > dcap:
                    d = dcap
                delay_hist[k - 1, d] += 1
            s = nst + a
    scal[0] += xsum
    scal[1] += x2
    scal[2] += passed
    scal[3] += atot - passed
    scal[4] += atot
    return s


def right_turn_batch(object state, i64[:, ::1] arr, int g, int r,
                     i64[::1] over_hist, i64[::1] scal):
    cdef Py_ssize_t n_cyc = arr.shape[0]
    cdef long long cap = over_hist.shape[0] - 1
    cdef long long s = state
    cdef long long xsum = 0, x2 = 0, atot = 0, a
    cdef Py_ssize_t i
    cdef long long k
    for i in range(n_cyc):
        for k in range(g):
            a = arr[i, k]
            atot += a
            s += a - 1
            if s < 0:
                s = 0
        if s <= cap:
            over_hist[s] += 1
        else:
            over_hist[cap] += 1
        xsum += s
        x2 += s * s
        for k in range(g, g + r):
            a = arr[i, k]
            atot += a
            s += a
    scal[0] += xsum
    scal[1] += x2
    scal[4] += atot
    return s


def hesitation_batch(object state, i64[:, ::1] arr, i64[:, ::1] hes, int g, int r,
                     i64[::1] over_hist, i64[::1] scal):
    cdef Py_ssize_t n_cyc = arr.shape[0]
    cdef long long cap = over_hist.shape[0] - 1
    cdef long long s = state
    cdef long long xsum = 0, x2 = 0, atot = 0, a
    cdef Py_ssize_t i
    cdef long long k
    for i in range(n_cyc):
        for k in range(g):
            a = arr[i, k]
            atot += a
            if s > 0:
                s += a + hes[i, k] - 1
        if s <= cap:
            over_hist[s] += 1
        else:
            over_hist[cap] += 1
        xsum += s
        x2 += s * s
        for k in range(g, g + r):
            a = arr[i, k]
            atot += a
            s += a
    scal[0] += xsum
    scal[1] += x2
    scal[4] += atot
    return s


def interrupted_batch(object state, i64[:, ::1] arr, i64[::1] reds, i64[::1] greens,
                      i64[::1] over_hist, i64[::1] scal):
    cdef Py_ssize_t n_cyc = arr.shape[0]
    cdef long long cap = over_hist.shape[0] - 1
    cdef long long s = state
    cdef long long xsum = 0, x2 = 0, atot = 0, a, ri, n_used
    cdef Py_ssize_t i
    cdef long long k
    for i in range(n_cyc):
        ri = reds[i]
        n_used = ri + greens[i]
        for k in range(ri):
            a = arr[i, k]
            atot += a
            s += a
        for k in range(ri, n_used):
            a = arr[i, k]
            atot += a
            if s > 0:
                s += a - 1
        if s <= cap:
            over_hist[s] += 1
        else:
            over_hist[cap] += 1
        xsum += s
        x2 += s * s
    scal[0] += xsum
    scal[1] += x2
    scal[4] += atot
    return s


def dependent_red_batch(object state, i64[:, ::1] arr, i64[::1] red_tot, int g,
                        i64[::1] over_hist, i64[::1] scal):
    cdef Py_ssize_t n_cyc = arr.shape[0]
    cdef long long cap = over_hist.shape[0] - 1
    cdef long long s = state
    cdef long long xsum = 0, x2 = 0, atot = 0, a
    cdef Py_ssize_t i
    cdef long long k
    for i in range(n_cyc):
        for k in range(g):
            a = arr[i, k]
            atot += a
            if s > 0:
                s += a - 1
        if s <= cap:
            over_hist[s] += 1
        else:
            over_hist[cap] += 1
        xsum += s
        x2 += s * s
        atot += red_tot[i]
        s += red_tot[i]
    scal[0] += xsum
    scal[1] += x2
    scal[4] += atot
    return s
