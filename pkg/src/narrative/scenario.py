"""Scenario files: JSON with 1-based indices and optional rational-literal weights."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import NarrativeError, ParseError, ValidationError
from .graph import DiGraph, parse_edge_list
from .mapping import AveragingSystem
from .means import parse_number

COMMANDS = ("analyze", "simulate", "invariant", "witness", "limit", "verify")


@dataclass
class Scenario:
    name: str
    graph: DiGraph
    system: AveragingSystem | None = None
    initial_vectors: list = field(default_factory=list)
    tol: float = 1e-12
    max_iter: int = 10**6
    commands: list = field(default_factory=list)
    gamma: float | None = None
    delta: float | None = None
    sample_range: tuple[float, float] | None = None
    expected: dict = field(default_factory=dict)

    def require_system(self) -> AveragingSystem:
        if self.system is None:
            raise ValidationError(f"scenario {self.name!r} describes a graph only; this command needs a system")
        return self.system

    def witness_values(self) -> tuple[float, float]:
        if self.gamma is not None and self.delta is not None:
            return self.gamma, self.delta
        lo, hi = self.require_system().domain.sample_bounds()
        return lo, hi


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("narrative.scenarios").iterdir()
                  if p.name.endswith(".json"))


def resolve(path_or_name: str) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    bundled = resources.files("narrative.scenarios") / f"{path_or_name}.json"
    if bundled.is_file():
        return Path(str(bundled))
    raise ParseError(f"scenario {path_or_name!r} not found (bundled: {', '.join(bundled_names())})")


def _graph_section(spec: dict, base: Path) -> DiGraph:
    labels = spec.get("labels")
    if "edgelist_file" in spec:
        text = (base / spec["edgelist_file"]).read_text(encoding="utf-8")
    elif "edgelist" in spec:
        text = spec["edgelist"]
    else:
        text = "\n".join(f"{u} {v}" for u, v in spec.get("edges", []))
    return parse_edge_list(text, labels, spec.get("vertex_count"))


def load(path_or_name: str) -> Scenario:
    path = resolve(path_or_name)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot parse scenario {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("scenario must be a JSON object")
    try:
        return from_dict(raw, path.parent, default_name=path.stem)
    except NarrativeError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"invalid scenario {path}: {exc!r}") from None


def from_dict(raw: dict, base: Path = Path("."), default_name: str = "scenario") -> Scenario:
    system = AveragingSystem.from_dict(raw["system"]) if "system" in raw else None
    if "graph" in raw:
        g = _graph_section(raw["graph"], base)
    elif system is not None:
        g = system.incidence
    else:
        raise ValidationError("scenario needs a 'system' or a 'graph' section")
    vectors = []
    for k, v in enumerate(raw.get("initial_vectors", [])):
        vec = [float(parse_number(c)) for c in v]
        if system is not None and len(vec) != system.p:
            raise ValidationError(f"initial vector {k + 1} has length {len(vec)}, system has p = {system.p}")
        vectors.append(vec)
    tol = float(raw.get("tol", 1e-12))
    if not tol > 0 or math.isnan(tol):
        raise ValidationError("tol must be positive")
    max_iter = int(raw.get("max_iter", 10**6))
    if max_iter < 1:
        raise ValidationError("max_iter must be positive")
    commands = list(raw.get("commands", []))
    unknown = [c for c in commands if c not in COMMANDS]
    if unknown:
        raise ValidationError(f"unknown commands {unknown}")
    wit = raw.get("witness", {})
    sampling = raw.get("sampling")
    return Scenario(
        name=raw.get("name", default_name),
        graph=g,
        system=system,
        initial_vectors=vectors,
        tol=tol,
        max_iter=max_iter,
        commands=commands,
        gamma=None if "gamma" not in wit else float(parse_number(wit["gamma"])),
        delta=None if "delta" not in wit else float(parse_number(wit["delta"])),
        sample_range=None if sampling is None else (float(sampling["low"]), float(sampling["high"])),
        expected=raw.get("expected", {}),
    )
