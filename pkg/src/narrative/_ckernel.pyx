# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled iteration kernels. Semantics match ``_pykernel`` exactly."""

import numpy as np
from libc.math cimport exp, log, pow, fabs, isfinite

DEF LINEAR = 0
DEF POWER = 1
DEF GEOMETRIC = 2
DEF MINIMUM = 3
DEF MAXIMUM = 4

BACKEND = "cython"


cdef void _step(const long[:] kind, const double[:] param, const long[:] ptr,
                const long[:] idx, const double[:] weight,
                const double[:] x, double[:] out) noexcept nogil:
    cdef Py_ssize_t p = kind.shape[0]
    cdef Py_ssize_t i, k
    cdef double lo, hi, v, acc, s, t
    for i in range(p):
        lo = x[idx[ptr[i]]]
        hi = lo
        for k in range(ptr[i] + 1, ptr[i + 1]):
            v = x[idx[k]]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        if lo == hi:
            out[i] = lo
            continue
        if kind[i] == LINEAR:
            acc = 0.0
            for k in range(ptr[i], ptr[i + 1]):
                acc = acc + weight[k] * x[idx[k]]
        elif kind[i] == POWER:
            t = param[i]
            s = hi if t > 0 else lo
            acc = 0.0
            for k in range(ptr[i], ptr[i + 1]):
                acc = acc + weight[k] * pow(x[idx[k]] / s, t)
            acc = s * pow(acc, 1.0 / t)
        elif kind[i] == GEOMETRIC:
            acc = 0.0
            for k in range(ptr[i], ptr[i + 1]):
                acc = acc + weight[k] * log(x[idx[k]])
            acc = exp(acc)
        elif kind[i] == MINIMUM:
            acc = lo
        else:
            acc = hi
        if acc < lo:
            acc = lo
        elif acc > hi:
            acc = hi
        out[i] = acc


cdef double _spread(const double[:] x) noexcept nogil:
    cdef double lo = x[0], hi = x[0]
    cdef Py_ssize_t i
    for i in range(1, x.shape[0]):
        if x[i] < lo:
            lo = x[i]
        if x[i] > hi:
            hi = x[i]
    return hi - lo


DEF WINDOW = 16


cdef bint _settled(double last, double before, double spread, double tol) noexcept nogil:
    """Off-diagonal stationarity from the largest steps of two consecutive windows."""
    cdef double r, err
    if before <= 0.0 or last >= before:
        return False
    r = pow(last / before, 1.0 / WINDOW)
    err = last * r / (1.0 - r)
    return err <= tol and spread - 2.0 * err >= tol


cdef int _run(const long[:] kind, const double[:] param, const long[:] ptr,
              const long[:] idx, const double[:] weight,
              double[:] x, double[:] buf, double tol, long max_iter, long *steps) noexcept nogil:
    cdef Py_ssize_t p = x.shape[0]
    cdef Py_ssize_t i
    cdef long n
    cdef int count = 0
    cdef double diff, sp, win = 0.0, last = 0.0, before = 0.0
    steps[0] = 0
    if _spread(x) < tol:
        return 0
    for n in range(1, max_iter + 1):
        _step(kind, param, ptr, idx, weight, x, buf)
        diff = 0.0
        for i in range(p):
            if not isfinite(buf[i]):
                steps[0] = n
                return 3
            if fabs(buf[i] - x[i]) > diff:
                diff = fabs(buf[i] - x[i])
            x[i] = buf[i]
        steps[0] = n
        sp = _spread(x)
        if sp < tol:
            return 0
        if diff == 0.0:
            return 1
        if diff > win:
            win = diff
        count += 1
        if count == WINDOW:
            before = last
            last = win
            win = 0.0
            count = 0
            if _settled(last, before, sp, tol):
                return 1
    return 2


def step(const long[:] kind, const double[:] param, const long[:] ptr,
         const long[:] idx, const double[:] weight, const double[:] x, double[:] out):
    _step(kind, param, ptr, idx, weight, x, out)


def run(const long[:] kind, const double[:] param, const long[:] ptr,
        const long[:] idx, const double[:] weight, x0, double tol, long max_iter):
    """Iterate to a verdict: (status, steps, final state)."""
    cdef double[:] x = np.array(x0, dtype=np.float64)
    cdef double[:] buf = np.empty(x.shape[0], dtype=np.float64)
    cdef long steps = 0
    cdef int status
    with nogil:
        status = _run(kind, param, ptr, idx, weight, x, buf, tol, max_iter, &steps)
    return status, steps, np.asarray(x)


def run_batch(const long[:] kind, const double[:] param, const long[:] ptr,
              const long[:] idx, const double[:] weight, starts, const double[:] tol, long max_iter):
    """Row-wise ``run`` over a 2-D array of starts, each with its own tolerance."""
    cdef double[:, :] xs = np.array(starts, dtype=np.float64)
    cdef Py_ssize_t m = xs.shape[0]
    cdef double[:] buf = np.empty(xs.shape[1], dtype=np.float64)
    status_arr = np.empty(m, dtype=np.int64)
    steps_arr = np.empty(m, dtype=np.int64)
    cdef long[:] status = status_arr
    cdef long[:] nsteps = steps_arr
    cdef long steps = 0
    cdef Py_ssize_t r
    with nogil:
        for r in range(m):
            status[r] = _run(kind, param, ptr, idx, weight, xs[r], buf, tol[r], max_iter, &steps)
            nsteps[r] = steps
    return status_arr, steps_arr, np.asarray(xs)
