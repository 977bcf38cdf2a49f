"""DOT and CSV writers. Output is deterministic for identical input."""

from __future__ import annotations

import csv
import io
from fractions import Fraction

from .graph import DiGraph, root, strongly_connected_components


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _dot(g: DiGraph, grouped: frozenset, name: str, group_label: str) -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  node [shape=circle];"]
    if grouped:
        lines += ["  subgraph cluster_root {", f"    label={_q(group_label)};",
                  "    style=filled;", "    color=lightgrey;"]
        lines += [f"    {_q(g.label(v))};" for v in sorted(grouped)]
        lines.append("  }")
    lines += [f"  {_q(g.label(v))};" for v in g.vertices if v not in grouped]
    lines += [f"  {_q(g.label(u))} -> {_q(g.label(v))};" for u, v in sorted(g.edges)]
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_dot(g: DiGraph) -> str:
    """The whole graph, root vertices grouped in a shaded cluster."""
    return _dot(g, root(g).root, "G", "root")


def condensation_dot(g: DiGraph) -> str:
    cond = strongly_connected_components(g)
    q = cond.quotient
    sources = frozenset(v for v in q.vertices if not q.predecessors[v])
    return _dot(q, sources, "G_SCC", "source")


def root_dot(g: DiGraph) -> str:
    rep = root(g)
    rg = rep.root_graph
    return _dot(rg, frozenset(rg.vertices), "R", "root")


def matrix_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([str(v) if isinstance(v, Fraction) else repr(float(v)) for v in row])
    return buf.getvalue()


def read_matrix_csv(text: str, exact: bool = False) -> list[list]:
    conv = Fraction if exact else float
    return [[conv(cell.strip()) for cell in row] for row in csv.reader(io.StringIO(text)) if row]
