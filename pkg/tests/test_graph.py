import json
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgecolor.graph import (
    EdgeColoring,
    Graph,
    GraphError,
    ImproperColoringError,
    UNREACHABLE,
    UncoloredEdgeError,
    UnknownEdgeError,
    canonical_matchings,
    generate,
    graph_from_json,
    graph_to_json,
    greedy_edge_coloring,
    verify_edge_coloring,
)


def random_graphs():
    return st.builds(
        lambda n, delta, seed: generate(
            "random_max_deg", {"n": n, "delta": min(delta, n - 1)}, seed=seed
        ),
        st.integers(4, 16),
        st.integers(1, 5),
        st.integers(0, 50),
    )


def test_line_distance_path():
    # u-v-w-x: consecutive edges are at distance 1
    g = generate("path", {"n": 4})
    assert g.line_distance(0, 1) == 1
    assert g.line_distance(0, 0) == 0
    assert g.line_distance(0, 2) == 2


def test_line_distance_unreachable_and_errors():
    g = Graph(4, [(0, 1), (2, 3)])
    assert g.line_distance(0, 1) is UNREACHABLE
    with pytest.raises(UnknownEdgeError):
        g.line_distance(0, 7)
    with pytest.raises(UnknownEdgeError):
        g.ball(9, 1)


def test_ball_radius_zero_and_star():
    g = generate("complete_bipartite", {"a": 1, "b": 5})
    assert g.ball(2, 0) == {2}
    assert g.ball(2, 1) == set(range(5))  # all edges share the center


def test_ball_on_path_matches_explicit_line_graph_bfs():
    # 12-edge path, radius 5 from one end -> first 6 edges
    g = generate("path", {"n": 13})
    assert g.m == 12
    # independent oracle: build the line graph explicitly and BFS it
    adj = {e: set() for e in range(g.m)}
    for e in range(g.m):
        for f in range(g.m):
            if e != f and set(g.edges[e]) & set(g.edges[f]):
                adj[e].add(f)
    dist = {0: 0}
    dq = deque([0])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                dq.append(y)
    expected = {e for e, d in dist.items() if d <= 5}
    assert g.ball(0, 5) == expected == set(range(6))


@settings(max_examples=40, deadline=None)
@given(random_graphs(), st.integers(0, 4))
def test_ball_monotone(g, r):
    for e in range(min(g.m, 5)):
        assert g.ball(e, r) <= g.ball(e, r + 1)


@settings(max_examples=25, deadline=None)
@given(random_graphs())
def test_line_distance_is_a_metric(g):
    edges = list(range(min(g.m, 7)))
    for e in edges:
        for f in edges:
            d1 = g.line_distance(e, f)
            d2 = g.line_distance(f, e)
            assert d1 == d2  # symmetry (UNREACHABLE is a singleton)
            if d1 is UNREACHABLE:
                continue
            assert (d1 == 0) == (e == f)
            for h in edges:
                d_eh = g.line_distance(e, h)
                d_hf = g.line_distance(h, f)
                if d_eh is not UNREACHABLE and d_hf is not UNREACHABLE:
                    assert d1 <= d_eh + d_hf


def test_verify_triangle():
    g = generate("cycle", {"n": 3})
    rep = verify_edge_coloring(g, EdgeColoring({0: 1, 1: 2, 2: 3}, 2))
    assert rep.proper and rep.colors_used == 3
    rep = verify_edge_coloring(g, EdgeColoring({0: 1, 1: 1, 2: 2}, 2))
    assert not rep.proper
    assert rep.conflicting_pair is not None
    with pytest.raises(UncoloredEdgeError, match="edge 2"):
        verify_edge_coloring(g, EdgeColoring({0: 1, 1: 2}, 2))


def test_verify_fallback_degree():
    g = generate("complete_bipartite", {"a": 1, "b": 3})
    rep = verify_edge_coloring(g, EdgeColoring({0: 1, 1: 4, 2: 5}, 3))
    assert rep.proper and rep.max_fallback_degree == 2


def test_canonical_matchings_single_vertex():
    g = generate("complete_bipartite", {"a": 1, "b": 3})
    base = greedy_edge_coloring(g)
    part = canonical_matchings(g, base, 1, {0})  # N(leaf 1) = {center 0}
    assert len(part.matchings) == 3
    assert all(len(m) == 1 for m in part.matchings)


def test_canonical_matchings_triangle():
    g = generate("cycle", {"n": 3})
    base = EdgeColoring({0: 1, 1: 2, 2: 3}, 2)
    part = canonical_matchings(g, base, 0, {1, 2})
    assert len(part.matchings) == 3
    assert all(len(m) == 1 for m in part.matchings)
    assert part.covered_edges() == {0, 1, 2}


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 30))
def test_canonical_matchings_random(seed):
    g = generate("random_max_deg", {"n": 12, "delta": 4}, seed=seed)
    base = greedy_edge_coloring(g)
    w = max(range(g.n), key=g.degree)
    U = {g.other_end(eid, w) for eid in g.incident(w)}
    part = canonical_matchings(g, base, w, U)
    # full cover, single membership
    touched = {eid for x in U for eid in g.incident(x)}
    seen = []
    for m in part.matchings:
        seen.extend(m)
        # pairwise endpoint-disjoint: brute force
        for i, a in enumerate(m):
            for b in m[i + 1 :]:
                assert not set(g.edges[a]) & set(g.edges[b])
    assert sorted(seen) == sorted(touched)
    assert len(part.matchings) <= 2 * g.max_degree


def test_canonical_matchings_improper_base():
    g = generate("cycle", {"n": 3})
    with pytest.raises(ImproperColoringError):
        canonical_matchings(g, EdgeColoring({0: 1, 1: 1, 2: 2}, 2), 0, {1})


def test_star_lb_counts():
    # delta*(delta-1) + delta edges, delta*(delta-1) + delta + 1 vertices
    g = generate("star_lb", {"delta": 3})
    assert g.m == 3 * 2 + 3 == 9
    assert g.n == 3 * 2 + 3 + 1 == 10
    assert g.max_degree == 3
    assert g.arrival_order is not None
    # star edges first, connectors last
    conn = set(g.meta["connector_edges"])
    assert all(e not in conn for e in g.arrival_order[:6])
    assert all(e in conn for e in g.arrival_order[6:])


def test_star_lb_ball_premise():
    # no leaf edge's radius-2 ball contains a leaf edge of another star, and
    # under the adversarial order every already-arrived edge in the ball is
    # from the same star
    g = generate("star_lb", {"delta": 4})
    stars = {}
    for e in g.meta["star_edges"]:
        c = min(g.edges[e])  # center has the smallest id within a star
        stars.setdefault(c, set()).add(e)
    star_of = {e: c for c, es in stars.items() for e in es}
    pos = {e: i for i, e in enumerate(g.arrival_order)}
    for e in g.meta["star_edges"]:
        ball = g.ball(e, 2)
        for f in ball:
            if f in star_of:
                assert star_of[f] == star_of[e]
            else:
                assert pos[f] > pos[e] or f in ball  # connectors arrive last
        arrived_before = {f for f in ball if pos[f] < pos[e]}
        assert all(star_of.get(f) == star_of[e] for f in arrived_before)


def test_generate_path_and_errors():
    g = generate("path", {"n": 3})
    assert g.m == 2 and g.max_degree == 2
    with pytest.raises(GraphError):
        generate("random_max_deg", {"n": 5, "delta": 5})
    with pytest.raises(GraphError):
        generate("nope", {})


def test_random_max_deg_cap():
    g = generate("random_max_deg", {"n": 100, "delta": 6}, seed=9)
    assert g.max_degree <= 6
    g2 = generate("random_max_deg", {"n": 100, "delta": 6}, seed=9)
    assert g.edges == g2.edges  # deterministic per seed


def test_graph_rejects_self_loops_and_parallel():
    with pytest.raises(GraphError):
        Graph(2, [(0, 0)])
    with pytest.raises(GraphError):
        Graph(3, [(0, 1), (1, 0)])
    g = Graph(3, [(0, 1), (1, 0)], allow_parallel=True)
    assert g.m == 2


def test_json_round_trip_bit_exact():
    g = generate("star_lb", {"delta": 3, "reps": 2}, seed=4)
    text = graph_to_json(g)
    g2 = graph_from_json(text)
    assert graph_to_json(g2) == text
    assert g2.edges == g.edges and g2.arrival_order == g.arrival_order


def test_greedy_edge_coloring_bound():
    g = generate("random_max_deg", {"n": 30, "delta": 7}, seed=3)
    col = greedy_edge_coloring(g)
    rep = verify_edge_coloring(g, col)
    assert rep.proper
    assert col.max_color() <= 2 * g.max_degree - 1
