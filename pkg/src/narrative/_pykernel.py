"""Pure-Python iteration kernels, used when the compiled extension is unavailable."""

import math

import numpy as np

from .mapping import GEOMETRIC, LINEAR, MINIMUM, POWER

BACKEND = "python"


def _step(kind, param, ptr, idx, weight, x, out):
    for i in range(len(kind)):
        a, b = ptr[i], ptr[i + 1]
        vals = [x[j] for j in idx[a:b]]
        lo, hi = min(vals), max(vals)
        if lo == hi:
            out[i] = lo
            continue
        op = kind[i]
        w = weight[a:b]
        if op == LINEAR:
            acc = 0.0
            for wk, v in zip(w, vals):
                acc += wk * v
        elif op == POWER:
            t = param[i]
            s = hi if t > 0 else lo
            acc = 0.0
            for wk, v in zip(w, vals):
                acc += wk * (v / s) ** t
            acc = s * acc ** (1.0 / t)
        elif op == GEOMETRIC:
            acc = 0.0
            for wk, v in zip(w, vals):
                acc += wk * math.log(v)
            acc = math.exp(acc)
        elif op == MINIMUM:
            acc = lo
        else:
            acc = hi
        out[i] = lo if acc < lo else hi if acc > hi else acc


WINDOW = 16


def settled(last, before, spread, tol):
    """Off-diagonal stationarity from the largest steps of two consecutive windows.

    The per-step decay rate is read off the ratio of window maxima; the
    remaining movement must be below ``tol`` and too small to close the spread.
    """
    if before <= 0.0 or last >= before:
        return False
    r = (last / before) ** (1.0 / WINDOW)
    err = last * r / (1.0 - r)
    return err <= tol and spread - 2.0 * err >= tol


def _lists(kind, param, ptr, idx, weight):
    return (list(map(int, kind)), list(map(float, param)), list(map(int, ptr)),
            list(map(int, idx)), list(map(float, weight)))


def _run(arrs, x, tol, max_iter):
    if max(x) - min(x) < tol:
        return 0, 0, x
    buf = [0.0] * len(x)
    win = last = before = 0.0
    count = 0
    for n in range(1, max_iter + 1):
        _step(*arrs, x, buf)
        diff = 0.0
        for i, v in enumerate(buf):
            if not math.isfinite(v):
                return 3, n, buf
            d = abs(v - x[i])
            if d > diff:
                diff = d
        x, buf = buf, x
        spread = max(x) - min(x)
        if spread < tol:
            return 0, n, x
        if diff == 0.0:
            return 1, n, x
        win = max(win, diff)
        count += 1
        if count == WINDOW:
            before, last, win, count = last, win, 0.0, 0
            if settled(last, before, spread, tol):
                return 1, n, x
    return 2, max_iter, x


def step(kind, param, ptr, idx, weight, x, out):
    res = [0.0] * len(kind)
    _step(*_lists(kind, param, ptr, idx, weight), [float(v) for v in x], res)
    out[:] = res


def run(kind, param, ptr, idx, weight, x0, tol, max_iter):
    status, n, x = _run(_lists(kind, param, ptr, idx, weight), [float(v) for v in x0], tol, max_iter)
    return status, n, np.asarray(x, dtype=np.float64)


def run_batch(kind, param, ptr, idx, weight, starts, tol, max_iter):
    arrs = _lists(kind, param, ptr, idx, weight)
    starts = np.array(starts, dtype=np.float64)
    status = np.empty(len(starts), dtype=np.int64)
    steps = np.empty(len(starts), dtype=np.int64)
    for r, row in enumerate(starts):
        status[r], steps[r], final = _run(arrs, row.tolist(), float(tol[r]), max_iter)
        starts[r] = final
    return status, steps, starts
