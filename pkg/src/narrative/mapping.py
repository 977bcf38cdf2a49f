"""Averaging systems: means wired into a self-map of ``I^p`` by index vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import graph
from .errors import DomainError, InternalError, ValidationError
from .means import BumpedArithmetic, MeanSpec, PowerMean, Projection, WeightedArithmetic, mean_from_dict, parse_number

__all__ = ["Interval", "AveragingSystem", "apply", "incidence_graph", "restrict_to_root"]

# Kernel opcodes; shared with _ckernel.pyx and _pykernel.py.
LINEAR, POWER, GEOMETRIC, MINIMUM, MAXIMUM = range(5)


@dataclass(frozen=True)
class Interval:
    low: float = -math.inf
    high: float = math.inf
    low_closed: bool = False
    high_closed: bool = False

    def __post_init__(self):
        if not self.low < self.high:
            raise ValidationError(f"empty interval ({self.low}, {self.high})")

    @classmethod
    def positive(cls) -> Interval:
        return cls(0.0, math.inf)

    def contains(self, v: float) -> bool:
        if math.isnan(v):
            return False
        above = v >= self.low if self.low_closed else v > self.low
        below = v <= self.high if self.high_closed else v < self.high
        return above and below

    def sample_bounds(self) -> tuple[float, float]:
        """A bounded subrange for random sampling."""
        lo = self.low if math.isfinite(self.low) else (0.0 if self.high > 10 else self.high - 10)
        hi = self.high if math.isfinite(self.high) else lo + 10.0
        if self.low == 0.0 and not self.low_closed:
            lo = 0.1
        return lo, hi

    def __str__(self) -> str:
        return f"{'[' if self.low_closed else '('}{self.low}, {self.high}{']' if self.high_closed else ')'}"

    def to_dict(self) -> dict:
        return {"low": _num_out(self.low), "high": _num_out(self.high),
                "low_closed": self.low_closed, "high_closed": self.high_closed}

    @classmethod
    def from_dict(cls, spec) -> Interval:
        if isinstance(spec, (list, tuple)):
            lo, hi = spec
            spec = {"low": lo, "high": hi}
        return cls(float(parse_number(spec.get("low", "-inf"))), float(parse_number(spec.get("high", "inf"))),
                   bool(spec.get("low_closed", False)), bool(spec.get("high_closed", False)))


def _num_out(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _needs_positive(m: MeanSpec) -> bool:
    return isinstance(m, PowerMean) and not (m.exponent == 1.0 or math.isinf(m.exponent))


@dataclass(frozen=True)
class CompiledSystem:
    """Flat arrays consumed by the iteration kernels."""

    kind: np.ndarray
    param: np.ndarray
    ptr: np.ndarray
    idx: np.ndarray
    weight: np.ndarray


@dataclass(frozen=True)
class AveragingSystem:
    """``p`` means with index vectors ``alpha`` (0-based) on the interval ``domain``."""

    means: tuple
    alpha: tuple
    domain: Interval | None = None

    def __post_init__(self):
        means = tuple(self.means)
        alpha = tuple(tuple(int(j) for j in a) for a in self.alpha)
        p = len(means)
        if p < 1:
            raise ValidationError("a system needs at least one node")
        if len(alpha) != p:
            raise ValidationError(f"{p} means but {len(alpha)} index vectors")
        for i, (m, a) in enumerate(zip(means, alpha)):
            if m.arity != len(a):
                raise ValidationError(f"node {i + 1}: mean arity {m.arity} != index vector length {len(a)}")
            bad = [j for j in a if not 0 <= j < p]
            if bad:
                raise ValidationError(f"node {i + 1}: index {bad[0] + 1} outside 1..{p}")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "alpha", alpha)
        if self.domain is None:
            dom = Interval.positive() if any(_needs_positive(m) for m in means) else Interval()
            object.__setattr__(self, "domain", dom)

    @property
    def p(self) -> int:
        return len(self.means)

    @property
    def d(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.alpha)

    @cached_property
    def incidence(self) -> graph.DiGraph:
        return graph.DiGraph(self.p, frozenset((j, i) for i, a in enumerate(self.alpha) for j in a))

    @cached_property
    def root_report(self) -> graph.RootReport:
        return graph.root(self.incidence)

    @property
    def is_affine(self) -> bool:
        return all(isinstance(m, (WeightedArithmetic, Projection)) for m in self.means)

    @cached_property
    def compiled(self) -> CompiledSystem | None:
        """Kernel encoding, or ``None`` when some mean has no kernel opcode."""
        kind, param, ptr, idx, weight = [], [], [0], [], []
        for m, a in zip(self.means, self.alpha):
            if isinstance(m, BumpedArithmetic):
                return None
            if isinstance(m, Projection):
                kind.append(LINEAR)
                param.append(1.0)
                idx.append(a[m.index])
                weight.append(1.0)
            elif isinstance(m, WeightedArithmetic):
                kind.append(LINEAR)
                param.append(1.0)
                idx.extend(a)
                weight.extend(m.float_weights)
            else:
                t = m.exponent
                op = (MAXIMUM if t == math.inf else MINIMUM if t == -math.inf else
                      GEOMETRIC if t == 0.0 else LINEAR if t == 1.0 else POWER)
                kind.append(op)
                param.append(t if math.isfinite(t) else 0.0)
                idx.extend(a)
                weight.extend([1.0 / len(a)] * len(a))
            ptr.append(len(idx))
        return CompiledSystem(
            np.asarray(kind, dtype=np.int64), np.asarray(param, dtype=np.float64),
            np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64),
            np.asarray(weight, dtype=np.float64),
        )

    def check_point(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.p,):
            raise ValidationError(f"vector of length {x.shape} given, system has {self.p} nodes")
        for i, v in enumerate(x):
            if not self.domain.contains(float(v)):
                raise DomainError(f"coordinate {i + 1} = {v!r} outside the domain {self.domain}")
        for m, a in zip(self.means, self.alpha):
            if isinstance(m, PowerMean):
                m.check_domain([float(x[j]) for j in a])
        return x

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "d": list(self.d),
            "alpha": [[j + 1 for j in a] for a in self.alpha],
            "means": [m.to_dict() for m in self.means],
            "domain": self.domain.to_dict(),
        }

    @classmethod
    def from_dict(cls, spec: dict) -> AveragingSystem:
        """Scenario ``system`` section; ``alpha`` is 1-based."""
        try:
            alpha_in = spec["alpha"]
            means_in = spec["means"]
        except (KeyError, TypeError):
            raise ValidationError("system needs 'alpha' and 'means'") from None
        if "p" in spec and int(spec["p"]) != len(alpha_in):
            raise ValidationError(f"p = {spec['p']} but {len(alpha_in)} index vectors given")
        if "d" in spec and [int(v) for v in spec["d"]] != [len(a) for a in alpha_in]:
            raise ValidationError("d does not match the index vector lengths")
        if len(means_in) != len(alpha_in):
            raise ValidationError(f"{len(means_in)} means for {len(alpha_in)} nodes")
        alpha = []
        for i, a in enumerate(alpha_in):
            if any(int(j) < 1 for j in a):
                raise ValidationError(f"node {i + 1}: alpha indices are 1-based")
            alpha.append(tuple(int(j) - 1 for j in a))
        means = tuple(mean_from_dict(m, len(a)) for m, a in zip(means_in, alpha))
        domain = Interval.from_dict(spec["domain"]) if "domain" in spec else None
        return cls(means, tuple(alpha), domain)


def apply(sys: AveragingSystem, x: Sequence[float]) -> np.ndarray:
    """One application of the mean-type map: node ``i`` averages ``x[alpha[i]]``."""
    x = sys.check_point(x)
    xs = x.tolist()
    return np.array([m.evaluate([xs[j] for j in a]) for m, a in zip(sys.means, sys.alpha)])


def incidence_graph(sys: AveragingSystem) -> graph.DiGraph:
    """Edge ``(alpha[i][j], i)`` for every argument slot: the source feeds the consumer."""
    return sys.incidence


def restrict_to_root(sys: AveragingSystem) -> AveragingSystem:
    """Subsystem on the root of the incidence graph, reindexed to ``0 .. q-1``."""
    order = sys.root_report.root_order
    pos = {v: k for k, v in enumerate(order)}
    alpha = []
    for v in order:
        try:
            alpha.append(tuple(pos[j] for j in sys.alpha[v]))
        except KeyError:
            raise InternalError(f"root node {v + 1} reads a non-root coordinate") from None
    return AveragingSystem(tuple(sys.means[v] for v in order), tuple(alpha), sys.domain)
