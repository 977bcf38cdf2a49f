"""Mean families used as node aggregation rules.

Power and weighted means clamp their value into ``[min(x), max(x)]`` to absorb
rounding. Every family returns ``x[0]`` exactly on constant input, so
reflexivity holds bit for bit.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "PowerMean",
    "WeightedArithmetic",
    "Projection",
    "BumpedArithmetic",
    "MeanSpec",
    "MeanFlags",
    "AuditReport",
    "evaluate",
    "flags",
    "build_bumped_mean",
    "check_mean_property",
    "mean_from_dict",
    "parse_number",
]

TOL = 1e-12


@dataclass(frozen=True)
class MeanFlags:
    strict: bool
    monotone: bool
    homogeneous: bool
    symmetric: bool


def _check_arity(m, x) -> list[float]:
    if len(x) != m.arity:
        raise ValidationError(f"arity mismatch: {type(m).__name__} takes {m.arity} values, got {len(x)}")
    return [float(v) for v in x]


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True)
class PowerMean:
    """``(sum x_i^t / d)^(1/t)``; ``t = 0`` geometric, ``t = -inf/+inf`` min/max."""

    exponent: float
    arity: int

    def __post_init__(self):
        if self.arity < 1:
            raise ValidationError("arity must be positive")
        if math.isnan(self.exponent):
            raise ValidationError("power mean exponent is NaN")
        object.__setattr__(self, "exponent", float(self.exponent))

    def check_domain(self, x: Sequence[float]) -> None:
        t = self.exponent
        if t == 1.0 or math.isinf(t):
            return
        if t > 0:
            if min(x) < 0:
                raise DomainError(f"power mean with exponent {t} needs nonnegative entries")
        elif min(x) <= 0:
            raise DomainError(f"power mean with exponent {t} needs positive entries")

    def evaluate(self, x: Sequence[float]) -> float:
        x = _check_arity(self, x)
        self.check_domain(x)
        lo, hi = min(x), max(x)
        if lo == hi:
            return x[0]
        t = self.exponent
        if t == math.inf:
            return hi
        if t == -math.inf:
            return lo
        d = len(x)
        if t == 0.0:
            v = math.exp(math.fsum(math.log(v) for v in x) / d)
        elif t == 1.0:
            v = math.fsum(x) / d
        else:
            # Scale by the dominant end to keep powers in range.
            s = hi if t > 0 else lo
            v = s * (math.fsum((xi / s) ** t for xi in x) / d) ** (1.0 / t)
        return _clamp(v, lo, hi)

    def flags(self) -> MeanFlags:
        # min and max are not strict
        return MeanFlags(math.isfinite(self.exponent) or self.arity == 1, True, True, True)

    def to_dict(self) -> dict:
        t = self.exponent
        return {"family": "power", "exponent": "inf" if t == math.inf else "-inf" if t == -math.inf else t,
                "arity": self.arity}


@dataclass(frozen=True)
class WeightedArithmetic:
    """``sum w_i x_i``. Weights may be floats or ``Fraction``; fractions enable exact matrix limits."""

    weights: tuple
    float_weights: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = tuple(self.weights)
        if not w:
            raise ValidationError("weighted mean needs at least one weight")
        if any(v < 0 for v in w):
            raise ValidationError("weights must be nonnegative")
        if all(isinstance(v, (int, Fraction)) for v in w):
            w = tuple(Fraction(v) for v in w)
            if sum(w) != 1:
                raise ValidationError(f"weights sum to {sum(w)}, not 1")
        elif abs(math.fsum(float(v) for v in w) - 1.0) > TOL:
            raise ValidationError(f"weights sum to {math.fsum(float(v) for v in w)!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "float_weights", tuple(float(v) for v in w))

    @property
    def arity(self) -> int:
        return len(self.weights)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.weights)

    def evaluate(self, x: Sequence[float]) -> float:
        x = _check_arity(self, x)
        lo, hi = min(x), max(x)
        if lo == hi:
            return x[0]
        v = math.fsum(w * xi for w, xi in zip(self.float_weights, x))
        return _clamp(v, lo, hi)

    def flags(self) -> MeanFlags:
        w = self.weights
        return MeanFlags(len(w) == 1 or all(v > 0 for v in w), True, True, len(set(w)) == 1)

    def to_dict(self) -> dict:
        return {"family": "weighted",
                "weights": [str(v) if isinstance(v, Fraction) else v for v in self.weights]}


@dataclass(frozen=True)
class Projection:
    """``x[index]`` (0-based). With arity 1 this is the identity, which is trivially strict."""

    index: int
    arity: int

    def __post_init__(self):
        if self.arity < 1 or not 0 <= self.index < self.arity:
            raise ValidationError(f"projection index {self.index} outside arity {self.arity}")

    def evaluate(self, x: Sequence[float]) -> float:
        return _check_arity(self, x)[self.index]

    def flags(self) -> MeanFlags:
        one = self.arity == 1
        return MeanFlags(one, True, True, one)

    def to_dict(self) -> dict:
        return {"family": "projection", "index": self.index + 1, "arity": self.arity}


def _tent_radius_bound(anchors, orbits) -> tuple[float, float]:
    a = sorted(anchors)
    gap = min(q - p for p, q in zip(a, a[1:]))
    pts = [pt for orb in orbits for pt in orb]
    sep = min(
        max(abs(u - v) for u, v in zip(p1, p2))
        for i, p1 in enumerate(pts) for p2 in pts[i + 1:]
    )
    return gap, sep


@dataclass(frozen=True)
class BumpedArithmetic:
    """Symmetric continuous strict 3-variable mean taking prescribed values at two orbits.

    Arithmetic mean plus tent bumps (max-metric radius ``radius``) on every
    permutation of ``(a, d, b)`` and ``(a, d, c)``, sized so that
    ``F(a, d, b) = c`` and ``F(a, d, c) = b``.
    """

    anchors: tuple
    radius: float
    orbits: tuple = field(init=False, repr=False, compare=False)
    targets: tuple = field(init=False, repr=False, compare=False)

    arity = 3

    def __post_init__(self):
        a, b, c, d = (float(v) for v in self.anchors)
        if not a < b < c < d:
            raise ValidationError("anchors must satisfy a < b < c < d")
        if not self.radius > 0:
            raise ValidationError("bump radius must be positive")
        object.__setattr__(self, "anchors", (a, b, c, d))
        orbits = (
            tuple(sorted(set(permutations((a, d, b))))),
            tuple(sorted(set(permutations((a, d, c))))),
        )
        object.__setattr__(self, "orbits", orbits)
        object.__setattr__(self, "targets", (c, b))
        _, sep = _tent_radius_bound(self.anchors, orbits)
        if 2 * self.radius > sep:
            raise ValidationError(
                f"bump supports overlap: radius {self.radius} > {sep / 2}; choose a smaller radius"
            )

    def evaluate(self, x: Sequence[float]) -> float:
        x = _check_arity(self, x)
        lo, hi = min(x), max(x)
        if lo == hi:
            return x[0]
        v = math.fsum(x) / 3.0
        r = self.radius
        for orbit, target in zip(self.orbits, self.targets):
            for pt in orbit:
                dist = max(abs(xi - pi) for xi, pi in zip(x, pt))
                if dist == 0.0:
                    return target
                if dist < r:
                    v += (target - sum(pt) / 3.0) * (1.0 - dist / r)
        return v

    def flags(self) -> MeanFlags:
        return MeanFlags(True, False, False, True)

    def to_dict(self) -> dict:
        return {"family": "bumped", "anchors": list(self.anchors), "radius": self.radius}


MeanSpec = Union[PowerMean, WeightedArithmetic, Projection, BumpedArithmetic]


def evaluate(m: MeanSpec, x: Sequence[float]) -> float:
    return m.evaluate(x)


def flags(m: MeanSpec) -> MeanFlags:
    return m.flags()


@dataclass
class AuditReport:
    samples: int
    mean_violations: int = 0
    strict_violations: int = 0
    worst_excess: float = 0.0
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mean_violations == 0 and self.strict_violations == 0


def _audit_point(m: MeanSpec, x, rep: AuditReport, tol: float = TOL) -> None:
    v = m.evaluate(x)
    lo, hi = min(x), max(x)
    scale = max(1.0, abs(lo), abs(hi))
    excess = max(lo - v, v - hi)
    if excess > tol * scale:
        rep.mean_violations += 1
        rep.worst_excess = max(rep.worst_excess, excess)
        if len(rep.examples) < 5:
            rep.examples.append((tuple(x), v))
    elif hi - lo > tol * scale and not (lo < v < hi):
        rep.strict_violations += 1
        if len(rep.examples) < 5:
            rep.examples.append((tuple(x), v))


def check_mean_property(m: MeanSpec, samples: int, domain: tuple[float, float], seed: int = 0) -> AuditReport:
    """Randomized audit of ``min <= M <= max`` and of strictness on nonconstant input."""
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    lo, hi = domain
    rng = random.Random(seed)
    rep = AuditReport(samples)
    for _ in range(samples):
        _audit_point(m, [rng.uniform(lo, hi) for _ in range(m.arity)], rep)
    return rep


def build_bumped_mean(a: float, b: float, c: float, d: float, r: float | None = None,
                      seed: int = 0) -> BumpedArithmetic:
    """Construct and certify the bumped mean; ``r`` defaults to a quarter of the smallest gap."""
    if not a < b < c < d:
        raise ValidationError("anchors must satisfy a < b < c < d")
    if r is None:
        orbits = (tuple(set(permutations((a, d, b)))), tuple(set(permutations((a, d, c)))))
        gap, sep = _tent_radius_bound((a, b, c, d), orbits)
        r = 0.25 * min(gap, sep)
    m = BumpedArithmetic((a, b, c, d), r)
    rep = AuditReport(0)
    grid = np.linspace(a, d, 21)
    for x in grid:
        for y in grid:
            for z in grid:
                _audit_point(m, (float(x), float(y), float(z)), rep)
                rep.samples += 1
    rand = check_mean_property(m, 10_000, (a, d), seed)
    if not (rep.ok and rand.ok):
        raise ValidationError(
            f"bumped mean fails the strictness audit at radius {r}; choose a smaller radius"
        )
    return m


def parse_number(v) -> float | Fraction:
    """``"10/21"`` and ints become ``Fraction``; floats stay floats; ``"inf"`` is accepted."""
    if isinstance(v, bool):
        raise ValidationError(f"not a number: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        s = v.strip()
        if s.lower() in ("inf", "+inf", "-inf"):
            return float(s)
        try:
            return Fraction(s) if "/" in s or s.lstrip("+-").isdigit() else float(s)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"not a number: {v!r}") from None
    raise ValidationError(f"not a number: {v!r}")


_POWER_ALIASES = {"arithmetic": 1.0, "geometric": 0.0, "harmonic": -1.0, "min": -math.inf, "max": math.inf}


def mean_from_dict(spec: dict, arity: int | None = None) -> MeanSpec:
    """Build a mean from its scenario description (indices are 1-based)."""
    try:
        family = spec["family"]
    except (KeyError, TypeError):
        raise ValidationError(f"mean description lacks 'family': {spec!r}") from None
    d = spec.get("arity", arity)
    if family in _POWER_ALIASES or family == "power":
        t = _POWER_ALIASES.get(family)
        if t is None:
            t = float(parse_number(spec["exponent"]))
        if d is None:
            raise ValidationError("power mean needs an arity")
        return PowerMean(t, int(d))
    if family == "weighted":
        return WeightedArithmetic(tuple(parse_number(w) for w in spec["weights"]))
    if family in ("projection", "identity"):
        d = 1 if family == "identity" and d is None else d
        return Projection(int(spec.get("index", 1)) - 1, int(d))
    if family == "bumped":
        a, b, c, dd = (float(parse_number(v)) for v in spec["anchors"])
        r = spec.get("radius")
        return build_bumped_mean(a, b, c, dd, None if r is None else float(r))
    raise ValidationError(f"unknown mean family {family!r}")
