"""Iteration of mean-type maps: verdicts, invariant means, and non-uniqueness witnesses."""

from __future__ import annotations

import csv
import io
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from . import graph, kernel
from .errors import BudgetError, DomainError, GraphError, NumericError, RefusalError, ValidationError
from ._pykernel import WINDOW, settled
from .mapping import AveragingSystem, apply

__all__ = [
    "Verdict",
    "IterationTrace",
    "WitnessReport",
    "PropertyReport",
    "iterate",
    "estimate_invariant_mean",
    "estimate_batch",
    "root_only_dependence",
    "verify_invariance",
    "verify_monotonicity",
    "verify_homogeneity",
    "nonuniqueness_witness",
    "limsup_liminf",
]

RING = 64
TAIL = 128
FULL_RECORD = 1000
THIN_EVERY = 10

_NO_UNIQUE = "no unique invariant mean: the root of the incidence graph is not ergodic"


def _scaled(tol: float, x: np.ndarray) -> float:
    return tol * max(1.0, float(np.max(np.abs(x))))


def _stepper(sys: AveragingSystem) -> Callable[[np.ndarray], np.ndarray]:
    comp = sys.compiled
    if comp is None:
        def step(x):
            xs = x.tolist()
            return np.array([m.evaluate([xs[j] for j in a]) for m, a in zip(sys.means, sys.alpha)])
        return step

    def step(x):
        out = np.empty_like(x)
        kernel.backend.step(comp.kind, comp.param, comp.ptr, comp.idx, comp.weight, x, out)
        return out
    return step


@dataclass
class Verdict:
    """``kind`` is ``converged`` (diagonal limit), ``stationary`` (non-diagonal
    fixed point), ``oscillating`` (exact recurrence) or ``undecided``."""

    kind: str
    iterations: int
    limit: float | None = None
    vector: np.ndarray | None = None
    period: int | None = None
    orbit: list | None = None

    def summary(self) -> str:
        if self.kind == "converged":
            return f"converged limit={self.limit!r} iterations={self.iterations}"
        if self.kind == "stationary":
            return f"stationary vector={[float(v) for v in self.vector]} iterations={self.iterations}"
        if self.kind == "oscillating":
            return f"oscillating period={self.period} iterations={self.iterations}"
        return f"undecided iterations={self.iterations}"


@dataclass
class IterationTrace:
    start: np.ndarray
    steps: list = field(default_factory=list)
    step_indices: list = field(default_factory=list)
    spread_history: list = field(default_factory=list)
    coord_min: np.ndarray | None = None
    coord_max: np.ndarray | None = None
    tail: deque = field(default_factory=lambda: deque(maxlen=TAIL))
    verdict: Verdict | None = None

    def record(self, n: int, x: np.ndarray) -> None:
        if n <= FULL_RECORD or n % THIN_EVERY == 0:
            self.steps.append(x)
            self.step_indices.append(n)
            self.spread_history.append(float(x.max() - x.min()))
        self.tail.append(x)
        if self.coord_min is None:
            self.coord_min, self.coord_max = x.copy(), x.copy()
        else:
            np.minimum(self.coord_min, x, out=self.coord_min)
            np.maximum(self.coord_max, x, out=self.coord_max)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        p = len(self.start)
        w.writerow(["step"] + [f"x_{i}" for i in range(p)] + ["spread"])
        for n, x, s in zip(self.step_indices, self.steps, self.spread_history):
            w.writerow([n] + [repr(float(v)) for v in x] + [repr(s)])
        return buf.getvalue()


def iterate(sys: AveragingSystem, x0: Sequence[float], tol: float = 1e-12,
            max_iter: int = 10**6) -> IterationTrace:
    """Apply the map until the spread drops below ``tol``, a state recurs, or the budget runs out.

    ``tol`` is absolute for data of unit magnitude and scales with ``max|x0|``
    above that.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    x = sys.check_point(x0).copy()
    trace = IterationTrace(start=x.copy())
    trace.record(0, x)
    eps = _scaled(tol, x)
    rec_eps = _scaled(1e-12, x)
    if x.max() - x.min() < eps:
        trace.verdict = Verdict("converged", 0, limit=float(0.5 * (x.max() + x.min())), vector=x)
        return trace
    step = _stepper(sys)
    ring = np.full((RING, sys.p), np.nan)
    ring_idx = np.full(RING, -1, dtype=np.int64)
    ring[0], ring_idx[0] = x, 0
    win = last = before = 0.0
    count = 0
    for n in range(1, max_iter + 1):
        new = step(x)
        if not np.all(np.isfinite(new)):
            raise NumericError(f"non-finite value at iteration step {n}")
        trace.record(n, new)
        lo, hi = new.min(), new.max()
        if hi - lo < eps:
            trace.verdict = Verdict("converged", n, limit=float(0.5 * (lo + hi)), vector=new)
            return trace
        diff = float(np.max(np.abs(new - x)))
        win = max(win, diff)
        count += 1
        if count == WINDOW:
            before, last, win, count = last, win, 0.0, 0
        if diff == 0.0 or (count == 0 and settled(last, before, float(hi - lo), eps)):
            trace.verdict = Verdict("stationary", n, vector=new)
            return trace
        dist = np.max(np.abs(ring - new), axis=1)
        hits = np.flatnonzero(dist <= rec_eps)
        if hits.size:
            m = int(ring_idx[hits].max())
            order = np.argsort(ring_idx)
            orbit = [ring[k].copy() for k in order if ring_idx[k] >= m]
            # A slowly converging sequence also comes back within tolerance;
            # a genuine cycle moves far more than it misses by.
            amplitude = max(float(np.max(np.abs(s - new))) for s in orbit)
            if amplitude > max(eps, 1e3 * float(dist[hits].max())):
                trace.verdict = Verdict("oscillating", n, period=n - m, orbit=orbit, vector=new)
                return trace
        ring[n % RING], ring_idx[n % RING] = new, n
        x = new
    trace.verdict = Verdict("undecided", max_iter, vector=x)
    return trace


def limsup_liminf(trace: IterationTrace, tail_window: int = TAIL) -> tuple[np.ndarray, np.ndarray]:
    """Finite-horizon estimates ``(L, U)`` of the coordinatewise liminf and limsup.

    Uses the last ``tail_window`` steps. Shorter traces are accepted when the
    verdict pins the limit set exactly: the limit vector, or the periodic orbit.
    """
    v = trace.verdict
    if len(trace.tail) >= tail_window:
        tail = np.array(list(trace.tail)[-tail_window:])
        return tail.min(axis=0), tail.max(axis=0)
    if v is not None and v.kind in ("converged", "stationary"):
        return v.vector.copy(), v.vector.copy()
    if v is not None and v.kind == "oscillating":
        orbit = np.array(v.orbit)
        return orbit.min(axis=0), orbit.max(axis=0)
    raise ValidationError(f"trace has {len(trace.tail)} tail steps, {tail_window} required")


def _require_ergodic(sys: AveragingSystem) -> None:
    if not sys.root_report.is_ergodic:
        raise RefusalError(
            f"{_NO_UNIQUE} (uniqueness holds if and only if the root is ergodic); "
            "use the witness command instead"
        )


def _finish(status: int, steps: int, xf: np.ndarray) -> float:
    if status == kernel.CONVERGED:
        return float(0.5 * (xf.max() + xf.min()))
    if status == kernel.NONFINITE:
        raise NumericError(f"non-finite value at iteration step {steps}")
    if status == kernel.STATIONARY:
        raise BudgetError(
            f"iteration stalled off the diagonal after {steps} steps (are all means strict?)"
        )
    raise BudgetError(f"no convergence within {steps} iterations")


def estimate_invariant_mean(sys: AveragingSystem, x: Sequence[float], tol: float = 1e-12,
                            max_iter: int = 10**6) -> float:
    """Common limit of all coordinates of the iterates (root must be ergodic)."""
    _require_ergodic(sys)
    x = sys.check_point(x)
    comp = sys.compiled
    if comp is None:
        v = iterate(sys, x, tol, max_iter).verdict
        if v.kind == "converged":
            return v.limit
        raise BudgetError(f"no convergence: {v.summary()}")
    status, steps, xf = kernel.backend.run(comp.kind, comp.param, comp.ptr, comp.idx, comp.weight,
                                           x, _scaled(tol, x), max_iter)
    return _finish(status, steps, xf)


def estimate_batch(sys: AveragingSystem, starts, tol: float = 1e-12, max_iter: int = 10**6) -> np.ndarray:
    """``estimate_invariant_mean`` over the rows of ``starts``."""
    _require_ergodic(sys)
    starts = np.array([sys.check_point(row) for row in starts], dtype=np.float64)
    comp = sys.compiled
    if comp is None:
        return np.array([estimate_invariant_mean(sys, row, tol, max_iter) for row in starts])
    tols = np.array([_scaled(tol, row) for row in starts])
    status, steps, xf = kernel.backend.run_batch(comp.kind, comp.param, comp.ptr, comp.idx, comp.weight,
                                                 starts, tols, max_iter)
    return np.array([_finish(int(s), int(n), row) for s, n, row in zip(status, steps, xf)])


def _sample(rng: random.Random, sys: AveragingSystem, low, high) -> tuple[float, float]:
    lo, hi = sys.domain.sample_bounds()
    return (lo if low is None else low), (hi if high is None else high)


def root_only_dependence(sys: AveragingSystem, x: Sequence[float], resamples: int = 20, seed: int = 0,
                         low: float | None = None, high: float | None = None,
                         tol: float = 1e-12) -> float:
    """Largest change of the invariant mean when non-root coordinates are redrawn."""
    rng = random.Random(seed)
    lo, hi = _sample(rng, sys, low, high)
    x = sys.check_point(x)
    nonroot = [i for i in range(sys.p) if i not in sys.root_report.root]
    starts = [x]
    for _ in range(resamples):
        y = x.copy()
        for i in nonroot:
            y[i] = rng.uniform(lo, hi)
        starts.append(y)
    k = estimate_batch(sys, starts, tol)
    return float(np.max(np.abs(k[1:] - k[0]))) if resamples else 0.0


@dataclass
class PropertyReport:
    name: str
    samples: int
    max_error: float
    threshold: float
    applicable: bool = True

    @property
    def ok(self) -> bool:
        return (not self.applicable) or self.max_error < self.threshold


def _random_points(sys, samples, seed, low, high) -> list[np.ndarray]:
    rng = random.Random(seed)
    lo, hi = _sample(rng, sys, low, high)
    return [np.array([rng.uniform(lo, hi) for _ in range(sys.p)]) for _ in range(samples)]


def verify_invariance(sys: AveragingSystem, samples: int = 100, seed: int = 0,
                      low: float | None = None, high: float | None = None,
                      estimator: Callable | None = None, tol: float = 1e-12) -> PropertyReport:
    """``K(x)`` against ``K(M(x))`` at random points."""
    pts = _random_points(sys, samples, seed, low, high)
    if estimator is None:
        a = estimate_batch(sys, pts, tol)
        b = estimate_batch(sys, [apply(sys, x) for x in pts], tol)
    else:
        a = np.array([estimator(x) for x in pts])
        b = np.array([estimator(apply(sys, x)) for x in pts])
    err = float(np.max(np.abs(a - b))) if samples else 0.0
    return PropertyReport("invariance", samples, err, 1e-9)


def verify_monotonicity(sys: AveragingSystem, samples: int = 100, seed: int = 0,
                        low: float | None = None, high: float | None = None,
                        bump: float = 1e-3, tol: float = 1e-12) -> PropertyReport:
    """Largest decrease of ``K`` when one coordinate is raised by ``bump``."""
    applicable = all(m.flags().monotone for m in sys.means)
    if not applicable:
        return PropertyReport("monotonicity", 0, 0.0, 1e-10, applicable=False)
    pts = _random_points(sys, samples, seed, low, high)
    worst = 0.0
    for x in pts:
        probes = [x]
        for i in range(sys.p):
            y = x.copy()
            y[i] += bump
            if sys.domain.contains(float(y[i])):
                probes.append(y)
        k = estimate_batch(sys, probes, tol)
        worst = max(worst, float(np.max(k[0] - k[1:], initial=0.0)))
    return PropertyReport("monotonicity", samples, worst, 1e-10)


def verify_homogeneity(sys: AveragingSystem, samples: int = 100, seed: int = 0,
                       low: float | None = None, high: float | None = None,
                       lambdas: Sequence[float] = (0.5, 2.0), tol: float = 1e-12) -> PropertyReport:
    """Largest relative error of ``K(lx) = l K(x)`` on the positive half-line."""
    applicable = all(m.flags().homogeneous for m in sys.means) and sys.domain.low >= 0 \
        and sys.domain.high == math.inf
    if not applicable:
        return PropertyReport("homogeneity", 0, 0.0, 1e-9, applicable=False)
    pts = _random_points(sys, samples, seed, low, high)
    base = estimate_batch(sys, pts, tol)
    worst = 0.0
    for lam in lambdas:
        k = estimate_batch(sys, [lam * x for x in pts], tol)
        worst = max(worst, float(np.max(np.abs(k - lam * base) / np.abs(lam * base))))
    return PropertyReport("homogeneity", samples, worst, 1e-9)


@dataclass
class WitnessReport:
    """Evidence that the invariant mean is not unique.

    ``disconnected_root``: ``vectors`` are two fixed points that are not
    constant. ``periodic_root``: ``vectors[0]`` starts an orbit whose root
    coordinates cycle through the period classes.
    """

    kind: str
    vectors: list
    partition: tuple
    certification: dict

    @property
    def certified(self) -> bool:
        return bool(self.certification.get("certified"))

    def to_dict(self, sys: AveragingSystem | None = None) -> dict:
        return {
            "kind": self.kind,
            "vectors": [[float(v) for v in x] for x in self.vectors],
            "partition": [sorted(i + 1 for i in block) for block in self.partition],
            "certification": self.certification,
        }


def _fixed_point_with_frozen(sys: AveragingSystem, x: np.ndarray, free: list[int], tol: float,
                             max_iter: int) -> np.ndarray:
    """Solve ``M(x) = x`` over the coordinates ``free``; others are already fixed."""
    eps = _scaled(tol, x)
    comp = sys.compiled
    if comp is not None:
        status, _, xf = kernel.backend.run(comp.kind, comp.param, comp.ptr, comp.idx, comp.weight,
                                           x, eps, max_iter)
        if status in (kernel.STATIONARY, kernel.CONVERGED):
            x = xf
    step = _stepper(sys)
    y = x.copy()
    if np.max(np.abs(step(y) - y)) > eps:
        # Averaged (Mann) iteration damps period-2 behaviour.
        for _ in range(max_iter):
            nxt = 0.5 * (y + step(y))
            if np.max(np.abs(nxt - y)) <= eps:
                y = nxt
                break
            y = nxt
        if np.max(np.abs(step(y) - y)) > eps:
            def resid(z):
                w = y.copy()
                w[free] = z
                return step(w)[free] - z
            sol = optimize.root(resid, y[free], method="hybr", tol=1e-14)
            y[free] = sol.x
    # Settle onto an exact floating-point fixed point when the map allows it.
    for _ in range(200):
        nxt = step(y)
        if np.array_equal(nxt, y) or np.max(np.abs(nxt - y)) > eps:
            break
        y = nxt
    return y


def nonuniqueness_witness(sys: AveragingSystem, gamma: float, delta: float, tol: float = 1e-12,
                          max_iter: int = 10**5) -> WitnessReport:
    """Construct and certify a witness that the invariant mean is not unique."""
    rep = sys.root_report
    if rep.is_ergodic:
        raise RefusalError("the root is ergodic, so the invariant mean is unique; no witness exists")
    gamma, delta = float(gamma), float(delta)
    if gamma == delta:
        raise ValidationError("gamma and delta must differ")
    for v in (gamma, delta):
        if not sys.domain.contains(v):
            raise DomainError(f"{v!r} outside the domain {sys.domain}")
    g = sys.incidence
    if len(rep.components) >= 2:
        return _disconnected_witness(sys, g, gamma, delta, tol, max_iter)
    return _periodic_witness(sys, g, gamma, delta)


def _disconnected_witness(sys, g, gamma, delta, tol, max_iter) -> WitnessReport:
    rep = sys.root_report
    eps = _scaled(tol, np.array([gamma, delta]))
    try:
        v0, rest = graph.succ_prec_partition(g)
        blocks = (v0, rest)
        mixed: list[int] = []
        method = "edge-free partition"
    except GraphError:
        others = frozenset().union(*rep.components[1:])
        hit_first = set(rep.components[0])
        for c in rep.components[0]:
            hit_first |= graph.succ(g, c)
        hit_others = set(others)
        for c in others:
            hit_others |= graph.succ(g, c)
        v0 = frozenset(v for v in g.vertices if v not in hit_others)
        rest = frozenset(v for v in g.vertices if v not in hit_first)
        mixed = sorted(set(g.vertices) - v0 - rest)
        blocks = (v0, rest, frozenset(mixed))
        method = "exclusive basins with solved remainder"
    vectors, residuals, exact = [], [], []
    for hi_val, lo_val in ((gamma, delta), (delta, gamma)):
        x = np.full(sys.p, 0.5 * (gamma + delta))
        x[sorted(v0)] = hi_val
        x[sorted(rest)] = lo_val
        if mixed:
            x = _fixed_point_with_frozen(sys, x, mixed, tol, max_iter)
        mx = apply(sys, x)
        residuals.append(float(np.max(np.abs(mx - x))))
        exact.append(bool(np.array_equal(mx, x)))
        vectors.append(x)
    frozen = sorted(v0 | rest)
    frozen_exact = all(np.array_equal(apply(sys, x)[frozen], x[frozen]) for x in vectors)
    cert = {
        "method": method,
        "root_components": [sorted(i + 1 for i in c) for c in rep.components],
        "residuals": residuals,
        "exact": exact,
        "frozen_blocks_exact": frozen_exact,
        "tolerance": eps,
        "certified": frozen_exact and all(r <= eps for r in residuals)
        and all(float(x.max() - x.min()) > 0 for x in vectors),
    }
    return WitnessReport("disconnected_root", vectors, blocks, cert)


def _periodic_witness(sys, g, gamma, delta) -> WitnessReport:
    rep = sys.root_report
    comp = rep.components[0]
    classes = graph.period_partition(g, comp)
    c = len(classes)
    if c < 2:
        raise RefusalError("root is aperiodic and connected; no witness exists")
    x = np.full(sys.p, gamma)
    x[sorted(comp - classes[0])] = delta
    root_idx = sorted(comp)
    n_steps = max(4 * c, 16)
    orbit_ok = True
    y = x.copy()
    seen = []
    for n in range(1, n_steps + 1):
        y = apply(sys, y)
        expect = np.array([gamma if v in classes[n % c] else delta for v in root_idx])
        orbit_ok &= bool(np.array_equal(y[root_idx], expect))
        seen.append(y[root_idx])
    seen = np.array(seen)
    cert = {
        "period": c,
        "steps_checked": n_steps,
        "orbit_exact": orbit_ok,
        "limsup": float(seen.max()),
        "liminf": float(seen.min()),
        "certified": orbit_ok and float(seen.max()) == max(gamma, delta)
        and float(seen.min()) == min(gamma, delta),
    }
    return WitnessReport("periodic_root", [x], tuple(classes), cert)
