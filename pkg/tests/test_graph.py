import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from narrative import graph
from narrative.errors import GraphError, OracleLimitError
from narrative.graph import DiGraph

from corpus import random_digraph

EX1 = DiGraph.from_labeled_edges(
    "abcdef", [("a", "d"), ("d", "a"), ("b", "c"), ("c", "b"), ("d", "e"), ("b", "e"), ("e", "f"), ("c", "f")]
)
EX2 = graph.parse_edge_list("1 1\n2 2\n4 4\n1 2\n2 1\n2 3\n3 4\n4 3\n")


def closure(g):
    """Boolean walk-reachability by Floyd-Warshall style relaxation."""
    n = g.vertex_count
    r = [[(u, v) in g.edges for v in range(n)] for u in range(n)]
    for k in range(n):
        for i in range(n):
            if r[i][k]:
                for j in range(n):
                    r[i][j] = r[i][j] or r[k][j]
    return r


def smallest_closed_reaching_set(g):
    """Minimum-cardinality S that reaches every outside vertex and contains its in-neighbours."""
    n = g.vertex_count
    r = closure(g)
    for size in range(n + 1):
        for s in itertools.combinations(range(n), size):
            s = set(s)
            if all(v in s or any(r[w][v] for w in s) for v in range(n)) and all(
                u in s for (u, v) in g.edges if v in s
            ):
                return frozenset(s)


def simple_cycle_lengths(g, vertices):
    vs = sorted(vertices)
    lengths = set()
    for k in range(1, len(vs) + 1):
        for combo in itertools.combinations(vs, k):
            first, rest = combo[0], combo[1:]
            for perm in itertools.permutations(rest):
                cyc = (first,) + perm
                if all((cyc[i], cyc[(i + 1) % k]) in g.edges for i in range(k)):
                    lengths.add(k)
    return lengths


def all_digraphs(p):
    pairs = [(u, v) for u in range(p) for v in range(p)]
    for mask in range(1 << len(pairs)):
        yield DiGraph(p, frozenset(e for i, e in enumerate(pairs) if mask >> i & 1))


def labels(g, vs):
    return {g.label(v) for v in vs}


class TestExamples:
    def test_example1_sccs_and_quotient(self):
        cond = graph.strongly_connected_components(EX1)
        classes = {frozenset(labels(EX1, c)) for c in cond.scc_members}
        assert classes == {frozenset("ad"), frozenset("bc"), frozenset("e"), frozenset("f")}
        name = {frozenset(labels(EX1, c)): k for k, c in enumerate(cond.scc_members)}
        P, Q, R, S = (name[frozenset(x)] for x in ("ad", "bc", "e", "f"))
        assert cond.quotient.edges == {(P, R), (Q, R), (Q, S), (R, S)}
        assert graph.source_set(cond.quotient) == {P, Q}

    def test_example1_root(self):
        rep = graph.root(EX1)
        assert labels(EX1, rep.root) == set("abcd")
        assert {frozenset(labels(EX1, c)) for c in rep.components} == {frozenset("ad"), frozenset("bc")}
        assert not rep.is_ergodic and not rep.is_irreducible and rep.period is None
        assert graph.verify_root_characterization(EX1)

    def test_example2_root(self):
        rep = graph.root(EX2)
        assert rep.root == {0, 1}
        assert len(rep.components) == 1 and rep.is_ergodic and rep.period == 1
        cond = graph.strongly_connected_components(EX2)
        assert len(graph.source_set(cond.quotient)) == 1

    def test_example2_rank_levels(self):
        assert graph.rank_levels(EX2) == {0: 0, 1: 0, 2: 1, 3: 2}

    def test_example5_rank_levels(self):
        g = DiGraph(4, frozenset({(0, 0), (1, 1), (0, 2), (1, 2), (2, 2), (0, 3), (1, 3), (3, 3)}))
        assert graph.rank_levels(g) == {0: 0, 1: 0, 2: 1, 3: 1}

    def test_example2_walk_threshold_by_enumeration(self):
        rg = graph.root(EX2).root_graph
        q0 = graph.walk_length_threshold(rg)
        n = rg.vertex_count

        def walk_exists(v, w, q):
            frontier = {v}
            for _ in range(q):
                frontier = {b for a in frontier for (x, b) in rg.edges if x == a}
            return w in frontier

        for q in range(1, q0 + 3):
            full = all(walk_exists(v, w, q) for v in range(n) for w in range(n))
            assert full == (q >= q0)


class TestTrivial:
    def test_singleton(self):
        g = DiGraph(1)
        cond = graph.strongly_connected_components(g)
        assert cond.scc_members == (frozenset({0}),) and not cond.quotient.edges
        assert graph.verify_root_characterization(g)
        rep = graph.root(g)
        assert rep.root == {0} and not rep.is_ergodic

    def test_null_graph(self):
        rep = graph.root(DiGraph(0))
        assert rep.root == frozenset() and not rep.is_ergodic
        assert graph.rank_levels(DiGraph(0)) == {}

    def test_all_loops_source_set_empty(self):
        g = DiGraph(3, frozenset((v, v) for v in range(3)))
        assert graph.source_set(g) == frozenset()

    def test_two_cycle_period(self):
        assert graph.period(DiGraph(2, frozenset({(0, 1), (1, 0)})), {0, 1}) == 2

    def test_period_errors(self):
        with pytest.raises(GraphError):
            graph.period(DiGraph(1), {0})
        with pytest.raises(GraphError):
            graph.period(DiGraph(2, frozenset({(0, 1)})), {0, 1})

    def test_complete_with_loops_threshold(self):
        assert graph.walk_length_threshold(DiGraph(2, frozenset(itertools.product(range(2), repeat=2)))) == 1

    def test_three_cycle_plus_loop_threshold(self):
        g = DiGraph(3, frozenset({(0, 1), (1, 2), (2, 0), (0, 0)}))
        q0 = graph.walk_length_threshold(g)
        a = g.adjacency().astype(bool)
        powers = [a]
        for _ in range(q0 + 2):
            powers.append((powers[-1].astype(int) @ a.astype(int)) > 0)
        assert not powers[q0 - 2].all() and all(m.all() for m in powers[q0 - 1:])
        assert q0 <= (3 - 1) ** 2 + 1

    def test_threshold_rejects_non_ergodic(self):
        with pytest.raises(GraphError):
            graph.walk_length_threshold(DiGraph(2, frozenset({(0, 1), (1, 0)})))

    def test_oracle_cap(self):
        with pytest.raises(OracleLimitError):
            graph.verify_root_characterization(DiGraph(13))

    def test_disjoint_loops_partition(self):
        g = DiGraph(2, frozenset({(0, 0), (1, 1)}))
        v0, rest = graph.succ_prec_partition(g)
        assert {v0, rest} == {frozenset({0}), frozenset({1})}

    def test_partition_refuses_connected_root(self):
        with pytest.raises(GraphError):
            graph.succ_prec_partition(EX2)

    def test_partition_refuses_shared_descendants(self):
        g = DiGraph(3, frozenset({(0, 0), (1, 1), (0, 2), (1, 2)}))
        with pytest.raises(GraphError):
            graph.succ_prec_partition(g)

    def test_irreducible_ranks_zero(self):
        g = DiGraph(3, frozenset({(0, 1), (1, 2), (2, 0)}))
        assert set(graph.rank_levels(g).values()) == {0}

    def test_parse_edge_list(self):
        g = graph.parse_edge_list("# comment\n1 2\n\n2 3  # trailing\n", vertex_count=4)
        assert g.vertex_count == 4 and g.edges == {(0, 1), (1, 2)}
        with pytest.raises(GraphError):
            graph.parse_edge_list("1 2 3\n")
        with pytest.raises(GraphError):
            graph.parse_edge_list("a b\n")
        with pytest.raises(GraphError):
            graph.parse_edge_list("0 1\n")
        lg = graph.parse_edge_list("x y\n", labels=["x", "y"])
        assert lg.edges == {(0, 1)} and lg.label(1) == "y"

    def test_bad_graphs(self):
        with pytest.raises(GraphError):
            DiGraph(2, frozenset({(0, 2)}))
        with pytest.raises(GraphError):
            DiGraph(2, labels=("a", "a"))


class TestExhaustiveSmall:
    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_sccs_and_root_all_graphs(self, p):
        for g in all_digraphs(p):
            check_scc(g)
            assert graph.root(g).root == smallest_closed_reaching_set(g)
            assert graph.verify_root_characterization(g)

    def test_random_graphs_up_to_five(self):
        rng = random.Random(11)
        for _ in range(1500):
            g = random_digraph(rng, rng.randint(1, 5))
            check_scc(g)
            assert graph.root(g).root == smallest_closed_reaching_set(g)


def check_scc(g):
    r = closure(g)
    cond = graph.strongly_connected_components(g)
    n = g.vertex_count
    assert sorted(v for c in cond.scc_members for v in c) == list(range(n))
    for u in range(n):
        for v in range(n):
            same = cond.membership[u] == cond.membership[v]
            assert same == (u == v or (r[u][v] and r[v][u]))
    qr = closure(cond.quotient)
    assert not any(qr[k][k] for k in range(cond.quotient.vertex_count))
    expected = {(cond.membership[u], cond.membership[v]) for u, v in g.edges
                if cond.membership[u] != cond.membership[v]}
    assert cond.quotient.edges == expected


def irreducible_graphs(draw_rng, n):
    while True:
        g = random_digraph(draw_rng, n, 0.45)
        if graph.is_irreducible(g) and g.edges:
            return g


class TestPeriodAndThreshold:
    def test_period_matches_cycle_gcd(self):
        rng = random.Random(5)
        for _ in range(150):
            g = irreducible_graphs(rng, rng.randint(1, 6))
            expect = math.gcd(*simple_cycle_lengths(g, g.vertices))
            assert graph.period(g, g.vertices) == expect

    def test_period_partition_advances(self):
        rng = random.Random(6)
        for _ in range(200):
            g = irreducible_graphs(rng, rng.randint(2, 6))
            classes = graph.period_partition(g, g.vertices)
            c = len(classes)
            where = {v: k for k, w in enumerate(classes) for v in w}
            assert all(where[v] == (where[u] + 1) % c for u, v in g.edges)
        cyc = DiGraph(6, frozenset((i, (i + 1) % 6) for i in range(6)) | {(0, 3), (3, 0)})
        assert len(graph.period_partition(cyc, cyc.vertices)) == 2

    def test_threshold_matches_boolean_powers(self):
        rng = random.Random(8)
        done = 0
        while done < 60:
            g = irreducible_graphs(rng, rng.randint(1, 6))
            if graph.period(g, g.vertices) != 1:
                continue
            done += 1
            q0 = graph.walk_length_threshold(g)
            a = g.adjacency().astype(np.int64)
            m = a.copy()
            full = []
            for q in range(1, (g.vertex_count - 1) ** 2 + 4):
                full.append(bool(m.all()))
                m = ((m @ a) > 0).astype(np.int64)
            assert full.index(True) + 1 == q0 and all(full[q0 - 1:])


@st.composite
def digraphs(draw, max_p=7):
    p = draw(st.integers(0, max_p))
    pairs = [(u, v) for u in range(p) for v in range(p)]
    chosen = draw(st.lists(st.sampled_from(pairs), max_size=len(pairs) * 2)) if pairs else []
    return DiGraph(p, frozenset(chosen))


@settings(max_examples=300, deadline=None)
@given(digraphs())
def test_root_invariants(g):
    rep = graph.root(g)
    if g.vertex_count:
        assert rep.root
    assert not any(u not in rep.root and v in rep.root for u, v in g.edges)
    assert rep.root == frozenset().union(*rep.components) if rep.components else not rep.root
    assert sum(len(c) for c in rep.components) == len(rep.root)
    for comp in rep.components:
        sub = g.induced(comp)
        # a loopless singleton source has no walks at all
        assert graph.is_irreducible(sub) or (len(comp) == 1 and not sub.edges)
    assert rep.is_ergodic == (len(rep.components) == 1 and rep.period == 1 and bool(rep.root))
    ranks = graph.rank_levels(g)
    assert {v for v, r in ranks.items() if r == 0} == rep.root
    for u, v in g.edges:
        assert ranks[v] <= ranks[u] + 1


@settings(max_examples=200, deadline=None)
@given(digraphs(max_p=6))
def test_irreducible_means_whole_root(g):
    if g.vertex_count and graph.is_irreducible(g):
        assert graph.root(g).root == frozenset(g.vertices)


@settings(max_examples=150, deadline=None)
@given(digraphs(max_p=6))
def test_partition_has_no_crossing_edges(g):
    try:
        v0, rest = graph.succ_prec_partition(g)
    except GraphError:
        return
    assert v0 and rest and v0 | rest == frozenset(g.vertices)
    assert all((u in v0) == (v in v0) for u, v in g.edges)
