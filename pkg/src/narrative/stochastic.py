"""The weighted-arithmetic case as a row-stochastic matrix and its power limit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import graph
from .errors import GraphError, InternalError, NumericError, RefusalError, ValidationError
from .mapping import AveragingSystem
from .means import Projection, WeightedArithmetic

__all__ = [
    "RowStochasticMatrix",
    "to_matrix",
    "limit_matrix",
    "limit_by_squaring",
    "stationary_distribution",
    "solve_exact",
]

TOL = 1e-12


@dataclass(frozen=True)
class RowStochasticMatrix:
    """``entries`` is a float ndarray, or a list of ``Fraction`` rows when ``exact``."""

    entries: object
    exact: bool = False

    def __post_init__(self):
        if self.exact:
            rows = [[Fraction(v) for v in row] for row in self.entries]
            n = len(rows)
            if any(len(r) != n for r in rows):
                raise ValidationError("matrix must be square")
            if any(v < 0 for r in rows for v in r) or any(sum(r) != 1 for r in rows):
                raise ValidationError("matrix is not row-stochastic")
            object.__setattr__(self, "entries", rows)
        else:
            a = np.array(self.entries, dtype=np.float64)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ValidationError("matrix must be square")
            if (a < 0).any() or np.max(np.abs(a.sum(axis=1) - 1.0), initial=0.0) > TOL:
                raise ValidationError("matrix is not row-stochastic")
            a.setflags(write=False)
            object.__setattr__(self, "entries", a)

    @property
    def size(self) -> int:
        return len(self.entries)

    def as_float(self) -> np.ndarray:
        if self.exact:
            return np.array([[float(v) for v in row] for row in self.entries])
        return self.entries

    @cached_property
    def incidence(self) -> graph.DiGraph:
        """Edge ``(j, i)`` whenever ``A[i][j] > 0``: argument ``j`` feeds node ``i``."""
        n = self.size
        return graph.DiGraph(n, frozenset((j, i) for i in range(n) for j in range(n) if self.entries[i][j] > 0))

    @cached_property
    def root_report(self) -> graph.RootReport:
        return graph.root(self.incidence)

    @property
    def root_block(self) -> tuple[int, ...]:
        return self.root_report.root_order

    @property
    def nonroot(self) -> tuple[int, ...]:
        r = self.root_report.root
        return tuple(i for i in range(self.size) if i not in r)

    def block(self, rows: Sequence[int], cols: Sequence[int]):
        if self.exact:
            return [[self.entries[i][j] for j in cols] for i in rows]
        return self.entries[np.ix_(rows, cols)]

    @property
    def P(self):
        return self.block(self.root_block, self.root_block)

    @property
    def Q(self):
        return self.block(self.nonroot, self.nonroot)

    @property
    def S(self):
        return self.block(self.nonroot, self.root_block)

    def apply(self, x: Sequence[float]) -> np.ndarray:
        a = self.as_float()
        return np.array([math.fsum(a[i, j] * float(x[j]) for j in range(self.size)) for i in range(self.size)])


def to_matrix(sys: AveragingSystem, exact: bool = False) -> RowStochasticMatrix:
    """Accumulate node weights into ``A`` so that ``M(x) = A x``."""
    if not sys.is_affine:
        raise RefusalError("matrix form needs weighted arithmetic means or projections only")
    p = sys.p
    if exact:
        for m in sys.means:
            if isinstance(m, WeightedArithmetic) and not m.exact:
                raise ValidationError("exact mode needs rational weights (e.g. \"1/9\")")
        a = [[Fraction(0)] * p for _ in range(p)]
        one = Fraction(1)
    else:
        a = np.zeros((p, p))
        one = 1.0
    for i, (m, idx) in enumerate(zip(sys.means, sys.alpha)):
        if isinstance(m, Projection):
            a[i][idx[m.index]] += one
        else:
            weights = m.weights if exact else m.float_weights
            for w, j in zip(weights, idx):
                a[i][j] += w
    return RowStochasticMatrix(a, exact)


def solve_exact(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise InternalError("singular system in exact solve")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [u - f * v for u, v in zip(m[r], m[col])]
    return [row[n] for row in m]


def _check_primitive(p_block, exact: bool) -> None:
    k = len(p_block)
    g = graph.DiGraph(k, frozenset((i, j) for i in range(k) for j in range(k) if p_block[i][j] > 0))
    if not graph.is_irreducible(g) or k == 0:
        raise GraphError("block is not irreducible")
    c = graph.period(g, range(k))
    if c != 1:
        raise RefusalError(f"block is periodic with period {c}; the powers have no limit")


def stationary_distribution(p_block, tol: float = 1e-12, exact: bool | None = None):
    """Unique ``pi >= 0`` with ``pi P = pi`` and ``sum(pi) = 1`` for a primitive block."""
    if exact is None:
        exact = bool(len(p_block)) and isinstance(p_block[0][0], Fraction)
    k = len(p_block)
    _check_primitive(p_block, exact)
    if exact:
        # pi (P - I) = 0 with the last equation replaced by normalisation.
        rows = [[p_block[j][i] - (1 if i == j else 0) for j in range(k)] for i in range(k)]
        rows[-1] = [Fraction(1)] * k
        rhs = [Fraction(0)] * (k - 1) + [Fraction(1)]
        return solve_exact(rows, rhs)
    p = np.asarray(p_block, dtype=np.float64)
    m = p.T - np.eye(k)
    m[-1, :] = 1.0
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    pi = np.linalg.solve(m, rhs)
    if np.max(np.abs(pi @ p - pi)) >= max(tol, 1e-15 * k):
        raise NumericError("stationary residual above tolerance")
    return pi


def limit_matrix(a: RowStochasticMatrix, tol: float = 1e-12):
    """``lim A^n`` from component stationary rows and absorption weights.

    Float mode returns an ndarray; exact mode a list of ``Fraction`` rows.
    """
    rep = a.root_report
    n = a.size
    root = a.root_block
    nonroot = a.nonroot
    pos = {v: k for k, v in enumerate(root)}
    exact = a.exact
    zero = Fraction(0) if exact else 0.0
    # Pi: limit of the root block; each root row carries its component's stationary row.
    pi_rows = {}
    for comp in rep.components:
        members = sorted(comp)
        sub = a.block(members, members)
        try:
            pi = stationary_distribution(sub, tol, exact)
        except RefusalError as exc:
            raise RefusalError(f"root component {sorted(v + 1 for v in members)}: {exc}") from None
        for v in members:
            row = [zero] * len(root)
            for u, w in zip(members, pi):
                row[pos[u]] = w
            pi_rows[v] = row
    big_pi = [pi_rows[v] for v in root]
    out = [[zero] * n for _ in range(n)]
    for v in root:
        for k, u in enumerate(root):
            out[v][u] = pi_rows[v][k]
    if nonroot:
        q = a.Q
        s = a.S
        k = len(nonroot)
        if exact:
            s_pi = [[sum((s[i][t] * big_pi[t][j] for t in range(len(root))), Fraction(0))
                     for j in range(len(root))] for i in range(k)]
            i_minus_q = [[(1 if i == j else 0) - q[i][j] for j in range(k)] for i in range(k)]
            cols = [solve_exact(i_minus_q, [s_pi[i][j] for i in range(k)]) for j in range(len(root))]
            for i, v in enumerate(nonroot):
                for j, u in enumerate(root):
                    out[v][u] = cols[j][i]
        else:
            s_pi = np.asarray(s) @ np.asarray(big_pi, dtype=np.float64)
            i_minus_q = np.eye(k) - np.asarray(q)
            if abs(np.linalg.det(i_minus_q)) < 1e-300:
                raise InternalError("I - Q is singular; some vertex does not reach the root")
            b = np.linalg.solve(i_minus_q, s_pi)
            for i, v in enumerate(nonroot):
                for j, u in enumerate(root):
                    out[v][u] = float(b[i, j])
    return out if exact else np.array(out, dtype=np.float64)


def limit_by_squaring(a: RowStochasticMatrix, tol: float = 1e-12, max_squarings: int = 64) -> np.ndarray:
    """Repeated squaring of ``A`` until successive powers differ by less than ``tol``."""
    base = np.array(a.as_float())
    m = base
    for _ in range(max_squarings):
        nxt = m @ m
        if np.max(np.abs(nxt - m)) < tol:
            # A^(2^k) can settle on a periodic chain; a true limit is fixed by A.
            if np.max(np.abs(base @ nxt - nxt)) >= max(tol, 1e-10):
                raise NumericError("powers cycle instead of converging (periodic root)")
            return nxt
        m = nxt
    raise NumericError(f"powers did not settle after {max_squarings} squarings (periodic root?)")
