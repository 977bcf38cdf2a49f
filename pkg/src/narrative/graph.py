"""Directed graphs and their structural analysis.

Vertices are the integers ``0 .. p-1``. Labels are cosmetic and only used for
display. A walk has length at least one, so ``v ~> v`` needs a cycle through
``v``; the SCC relation additionally treats every vertex as equivalent to
itself.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphError, InternalError, OracleLimitError

__all__ = [
    "DiGraph",
    "Condensation",
    "RootReport",
    "strongly_connected_components",
    "source_set",
    "root",
    "is_irreducible",
    "period",
    "period_partition",
    "walk_length_threshold",
    "rank_levels",
    "succ",
    "prec",
    "succ_prec_partition",
    "verify_root_characterization",
    "parse_edge_list",
]


@dataclass(frozen=True)
class DiGraph:
    vertex_count: int
    edges: frozenset = field(default_factory=frozenset)
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.vertex_count < 0:
            raise GraphError("vertex_count must be nonnegative")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise GraphError(f"edge ({u}, {v}) references a missing vertex")
        object.__setattr__(self, "edges", edges)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.vertex_count:
                raise GraphError("one label per vertex is required")
            if len(set(labels)) != len(labels):
                raise GraphError("vertex labels must be distinct")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_labeled_edges(cls, labels: Sequence[str], edges: Iterable[tuple[str, str]]) -> DiGraph:
        index = {str(s): i for i, s in enumerate(labels)}
        try:
            pairs = [(index[str(u)], index[str(v)]) for u, v in edges]
        except KeyError as exc:
            raise GraphError(f"unknown vertex label {exc.args[0]!r}") from None
        return cls(len(labels), frozenset(pairs), tuple(labels))

    @property
    def vertices(self) -> range:
        return range(self.vertex_count)

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v + 1)

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.vertices]
        for u, v in self.edges:
            out[u].append(v)
        return tuple(tuple(sorted(s)) for s in out)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.vertices]
        for u, v in self.edges:
            out[v].append(u)
        return tuple(tuple(sorted(s)) for s in out)

    def has_loop(self, v: int) -> bool:
        return (v, v) in self.edges

    def induced(self, vertices: Iterable[int]) -> DiGraph:
        """Subgraph induced on ``vertices``, reindexed in ascending order."""
        order = sorted(set(vertices))
        pos = {v: i for i, v in enumerate(order)}
        edges = frozenset((pos[u], pos[v]) for u, v in self.edges if u in pos and v in pos)
        labels = tuple(self.label(v) for v in order)
        return DiGraph(len(order), edges, labels)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count), dtype=bool)
        for u, v in self.edges:
            a[u, v] = True
        return a


@dataclass(frozen=True)
class Condensation:
    quotient: DiGraph
    membership: tuple[int, ...]
    scc_members: tuple[frozenset, ...]


@dataclass(frozen=True)
class RootReport:
    root: frozenset
    components: tuple[frozenset, ...]
    root_graph: DiGraph
    root_order: tuple[int, ...]
    is_irreducible: bool
    period: int | None
    is_ergodic: bool


def strongly_connected_components(g: DiGraph) -> Condensation:
    """Iterative Tarjan. SCC indices come out in topological order of the quotient."""
    n = g.vertex_count
    succ_lists = g.successors
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    found: list[list[int]] = []
    counter = 0
    for start in range(n):
        if index[start] != -1:
            continue
        work = [(start, 0)]
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack[start] = True
        while work:
            v, i = work[-1]
            nbrs = succ_lists[v]
            if i < len(nbrs):
                work[-1] = (v, i + 1)
                w = nbrs[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                found.append(comp)
    # Tarjan emits SCCs in reverse topological order.
    found.reverse()
    membership = [0] * n
    for k, comp in enumerate(found):
        for v in comp:
            membership[v] = k
    qedges = frozenset(
        (membership[u], membership[v]) for u, v in g.edges if membership[u] != membership[v]
    )
    labels = tuple("{" + ",".join(g.label(v) for v in sorted(c)) + "}" for c in found)
    quotient = DiGraph(len(found), qedges, labels)
    return Condensation(quotient, tuple(membership), tuple(frozenset(c) for c in found))


def source_set(g: DiGraph) -> frozenset:
    return frozenset(v for v in g.vertices if not g.predecessors[v])


def _reachable(g: DiGraph, starts: Iterable[int], forward: bool = True) -> set[int]:
    """Vertices reached from ``starts`` by walks of length >= 1."""
    nbrs = g.successors if forward else g.predecessors
    seen: set[int] = set()
    queue = deque()
    for s in starts:
        for w in nbrs[s]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    while queue:
        v = queue.popleft()
        for w in nbrs[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def is_irreducible(g: DiGraph) -> bool:
    """``v ~> w`` for every ordered pair, including ``v == w``. Vacuous for the null graph."""
    if g.vertex_count == 0:
        return True
    every = set(g.vertices)
    return _reachable(g, [0]) == every and _reachable(g, [0], forward=False) == every


def root(g: DiGraph) -> RootReport:
    cond = strongly_connected_components(g)
    sources = source_set(cond.quotient)
    components = tuple(sorted((cond.scc_members[k] for k in sources), key=min))
    members = frozenset().union(*components) if components else frozenset()
    order = tuple(sorted(members))
    root_graph = g.induced(order)
    irreducible = len(components) == 1 and is_irreducible(root_graph)
    per = period(root_graph, root_graph.vertices) if irreducible else None
    ergodic = bool(members) and irreducible and per == 1
    return RootReport(members, components, root_graph, order, irreducible, per, ergodic)


def _check_component(g: DiGraph, component: Iterable[int]) -> tuple[list[int], DiGraph]:
    comp = sorted(set(component))
    if not comp:
        raise GraphError("component is empty")
    sub = g.induced(comp)
    if not sub.edges:
        raise GraphError("component has no cycle; its period is undefined")
    if not is_irreducible(sub):
        raise GraphError("component does not induce an irreducible subgraph")
    return comp, sub


def _bfs_levels(sub: DiGraph) -> list[int]:
    level = [-1] * sub.vertex_count
    level[0] = 0
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in sub.successors[v]:
            if level[w] == -1:
                level[w] = level[v] + 1
                queue.append(w)
    return level


def period(g: DiGraph, component: Iterable[int]) -> int:
    """gcd of all cycle lengths inside an irreducible component."""
    _, sub = _check_component(g, component)
    level = _bfs_levels(sub)
    c = 0
    for u, v in sub.edges:
        c = math.gcd(c, abs(level[u] + 1 - level[v]))
    return c


def period_partition(g: DiGraph, component: Iterable[int]) -> list[frozenset]:
    """Classes ``W_0 .. W_{c-1}`` (BFS level mod period); every edge advances one class."""
    comp, sub = _check_component(g, component)
    level = _bfs_levels(sub)
    c = period(g, comp)
    classes: list[set[int]] = [set() for _ in range(c)]
    for i, v in enumerate(comp):
        classes[level[i] % c].add(v)
    return [frozenset(w) for w in classes]


def walk_length_threshold(g: DiGraph) -> int:
    """Least ``q0`` such that walks of every length ``q >= q0`` join every ordered pair."""
    rep = root(g)
    if not (rep.is_ergodic and len(rep.root) == g.vertex_count):
        raise GraphError("walk length threshold requires an ergodic graph")
    p = g.vertex_count
    a = g.adjacency().astype(np.int64)
    power = a.copy()
    cap = (p - 1) ** 2 + 1
    for q in range(1, cap + 1):
        if power.all():
            return q
        power = ((power @ a) > 0).astype(np.int64)
    raise InternalError(f"no all-ones power up to the Wielandt bound {cap}")


def rank_levels(g: DiGraph) -> dict[int, int]:
    """Distance from the closest root vertex (multi-source BFS)."""
    if g.vertex_count == 0:
        return {}
    rep = root(g)
    rank = {v: 0 for v in rep.root}
    queue = deque(sorted(rep.root))
    while queue:
        v = queue.popleft()
        for w in g.successors[v]:
            if w not in rank:
                rank[w] = rank[v] + 1
                queue.append(w)
    if len(rank) != g.vertex_count:
        raise InternalError("vertex unreachable from the root")
    return dict(sorted(rank.items()))


def succ(g: DiGraph, v: int) -> frozenset:
    return frozenset({v} | _reachable(g, [v]))


def prec(g: DiGraph, v: int) -> frozenset:
    return frozenset({v} | _reachable(g, [v], forward=False))


def succ_prec_partition(g: DiGraph) -> tuple[frozenset, frozenset]:
    """Split ``V`` into two parts with no edge crossing in either direction.

    Starts from a maximal ``Succ(v)`` and closes it under predecessors and
    successors. The closure is the weakly connected part containing it; when
    that part is all of ``V`` no such split exists and ``GraphError`` is raised.
    """
    rep = root(g)
    if len(rep.components) < 2:
        raise GraphError("root is connected; no disconnected-root partition applies")
    succs = {v: succ(g, v) for v in g.vertices}
    maximal = [v for v in g.vertices if not any(succs[v] < succs[w] for w in g.vertices)]
    v0 = set(succs[maximal[0]])
    queue = deque(v0)
    while queue:
        v = queue.popleft()
        for w in g.successors[v] + g.predecessors[v]:
            if w not in v0:
                v0.add(w)
                queue.append(w)
    rest = frozenset(g.vertices) - v0
    if not rest:
        raise GraphError(
            "root components share descendants; no edge-free two-block partition exists"
        )
    return frozenset(v0), rest


def _closure_matrix(g: DiGraph) -> list[list[bool]]:
    """Transitive closure by repeated edge relaxation (walks of length >= 1)."""
    n = g.vertex_count
    reach = [[False] * n for _ in range(n)]
    for u, v in g.edges:
        reach[u][v] = True
    changed = True
    while changed:
        changed = False
        for u, v in g.edges:
            row_v = reach[v]
            for w in range(n):
                if reach[w][u] and not reach[w][v]:
                    reach[w][v] = True
                    changed = True
            for w in range(n):
                if row_v[w] and not reach[u][w]:
                    reach[u][w] = True
                    changed = True
    return reach


def verify_root_characterization(g: DiGraph, cap: int = 12) -> bool:
    """Compare ``root(g)`` with the smallest set satisfying the two closure conditions.

    Every subset is enumerated; cost is ``2**p``.
    """
    n = g.vertex_count
    if n > cap:
        raise OracleLimitError(f"instance too large for oracle: {n} vertices > cap {cap}")
    reach = _closure_matrix(g)
    preds = [[u for u in range(n) if (u, v) in g.edges] for v in range(n)]

    def valid(s: frozenset) -> bool:
        for v in range(n):
            if v not in s and not any(reach[w][v] for w in s):
                return False
        return all(u in s for v in s for u in preds[v])

    for size in range(n + 1):
        hits = [frozenset(c) for c in combinations(range(n), size) if valid(frozenset(c))]
        if hits:
            return len(hits) == 1 and hits[0] == root(g).root
    return False


def parse_edge_list(text: str, labels: Sequence[str] | None = None, vertex_count: int | None = None) -> DiGraph:
    """Parse ``u v`` lines. Tokens are labels when given, else 1-based integers."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v', got {raw!r}")
        pairs.append((parts[0], parts[1]))
    if labels is not None:
        return DiGraph.from_labeled_edges(labels, pairs)
    try:
        idx = [(int(u) - 1, int(v) - 1) for u, v in pairs]
    except ValueError:
        raise GraphError("non-integer vertex token without a label map") from None
    if any(u < 0 or v < 0 for u, v in idx):
        raise GraphError("vertex indices are 1-based")
    n = max([max(u, v) + 1 for u, v in idx], default=0)
    if vertex_count is not None:
        if vertex_count < n:
            raise GraphError("vertex_count smaller than the largest index")
        n = vertex_count
    return DiGraph(n, frozenset(idx))
