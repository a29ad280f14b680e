"""Immutable undirected graphs with line-graph distance queries, coloring
verification, canonical matchings, and seeded instance generators.

Vertices and edges carry dense 0-based integer ids.  The line graph is never
materialized as a whole; per-edge adjacency lists are built lazily and cached,
which is what every distance/ball query runs on.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field


class GraphError(ValueError):
    pass


class UnknownEdgeError(GraphError):
    pass


class UncoloredEdgeError(GraphError):
    pass


class ImproperColoringError(GraphError):
    pass


class _Unreachable:
    """Explicit 'no path in the line graph' variant returned by line_distance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNREACHABLE"


UNREACHABLE = _Unreachable()


class Graph:
    """Undirected graph, immutable after construction.

    Parallel edges are rejected unless ``allow_parallel=True`` (used only for
    the virtual graphs built inside degree splitting).  Self-loops are never
    allowed.  Safe for concurrent reads.
    """

    def __init__(self, n, edges, arrival_order=None, allow_parallel=False, meta=None):
        self.n = int(n)
        self.edges = []
        self._inc = [[] for _ in range(self.n)]
        seen = set()
        for eid, (u, v) in enumerate(edges):
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge ({u},{v}) out of vertex range")
            key = (min(u, v), max(u, v))
            if key in seen and not allow_parallel:
                raise GraphError(f"parallel edge ({u},{v}); pass allow_parallel=True")
            seen.add(key)
            self.edges.append((u, v))
            self._inc[u].append(eid)
            self._inc[v].append(eid)
        self.allow_parallel = allow_parallel
        self.meta = dict(meta) if meta else {}
        self.max_degree = max((len(inc) for inc in self._inc), default=0)
        if arrival_order is not None:
            order = list(arrival_order)
            if sorted(order) != list(range(self.m)):
                raise GraphError("arrival_order is not a permutation of edge ids")
            self.arrival_order = order
        else:
            self.arrival_order = None
        self._edge_adj = [None] * self.m

    @property
    def m(self):
        return len(self.edges)

    def degree(self, v):
        return len(self._inc[v])

    def incident(self, v):
        """Edge ids incident to vertex v."""
        return self._inc[v]

    def endpoints(self, eid):
        try:
            return self.edges[eid]
        except IndexError:
            raise UnknownEdgeError(f"unknown edge id {eid}") from None

    def other_end(self, eid, v):
        u, w = self.edges[eid]
        return w if v == u else u

    def edge_neighbors(self, eid):
        """Line-graph neighbors of eid (edges sharing an endpoint), cached."""
        if eid < 0 or eid >= self.m:
            raise UnknownEdgeError(f"unknown edge id {eid}")
        adj = self._edge_adj[eid]
        if adj is None:
            u, v = self.edges[eid]
            adj = sorted((set(self._inc[u]) | set(self._inc[v])) - {eid})
            self._edge_adj[eid] = adj
        return adj

    def ball_depths(self, eid, radius):
        """BFS in the line graph: maps edge id -> hop distance, up to radius."""
        if eid < 0 or eid >= self.m:
            raise UnknownEdgeError(f"unknown edge id {eid}")
        depths = {eid: 0}
        frontier = deque([eid])
        while frontier:
            cur = frontier.popleft()
            d = depths[cur]
            if d >= radius:
                continue
            for nxt in self.edge_neighbors(cur):
                if nxt not in depths:
                    depths[nxt] = d + 1
                    frontier.append(nxt)
        return depths

    def ball(self, eid, radius):
        """All edges f with line_distance(eid, f) <= radius, including eid."""
        if radius < 0:
            raise GraphError("radius must be >= 0")
        return set(self.ball_depths(eid, radius))

    def line_distance(self, e, f):
        """Hop distance between edges in the line graph; UNREACHABLE if none."""
        if e < 0 or e >= self.m:
            raise UnknownEdgeError(f"unknown edge id {e}")
        if f < 0 or f >= self.m:
            raise UnknownEdgeError(f"unknown edge id {f}")
        if e == f:
            return 0
        depths = {e: 0}
        frontier = deque([e])
        while frontier:
            cur = frontier.popleft()
            for nxt in self.edge_neighbors(cur):
                if nxt == f:
                    return depths[cur] + 1
                if nxt not in depths:
                    depths[nxt] = depths[cur] + 1
                    frontier.append(nxt)
        return UNREACHABLE

    def vertex_ball(self, v, radius):
        """Vertices within graph distance <= radius of v."""
        depths = {v: 0}
        frontier = deque([v])
        while frontier:
            cur = frontier.popleft()
            if depths[cur] >= radius:
                continue
            for eid in self._inc[cur]:
                w = self.other_end(eid, cur)
                if w not in depths:
                    depths[w] = depths[cur] + 1
                    frontier.append(w)
        return depths

    def subgraph_of_edges(self, edge_ids):
        """Same vertex set, restricted edge set; keeps a map to parent ids."""
        edge_ids = sorted(edge_ids)
        sub = Graph(self.n, [self.edges[e] for e in edge_ids])
        sub.meta["parent_edge_ids"] = edge_ids
        return sub


@dataclass
class EdgeColoring:
    """Edge -> positive color.  Colors in [1, delta] form the main palette;
    the fallback palette starts at delta + 1."""

    assignment: dict
    delta: int

    def color(self, eid):
        return self.assignment.get(eid)

    def colors_used(self):
        return len(set(self.assignment.values()))

    def max_color(self):
        return max(self.assignment.values(), default=0)


@dataclass
class VerifyReport:
    proper: bool
    colors_used: int
    max_fallback_degree: int
    conflicting_pair: tuple | None = None


def verify_edge_coloring(g: Graph, col: EdgeColoring) -> VerifyReport:
    """Check properness, count colors, and measure the fallback-palette degree.

    Raises UncoloredEdgeError naming the first uncolored edge.  The report's
    ``conflicting_pair`` carries the first adjacent same-colored pair found.
    """
    for eid in range(g.m):
        if col.color(eid) is None:
            raise UncoloredEdgeError(f"edge {eid} is uncolored")
    conflict = None
    for v in range(g.n):
        by_color = {}
        for eid in g.incident(v):
            c = col.color(eid)
            if c in by_color:
                conflict = (by_color[c], eid)
                break
            by_color[c] = eid
        if conflict:
            break
    fallback = 0
    for v in range(g.n):
        k = sum(1 for eid in g.incident(v) if col.color(eid) > col.delta)
        fallback = max(fallback, k)
    return VerifyReport(
        proper=conflict is None,
        colors_used=col.colors_used(),
        max_fallback_degree=fallback,
        conflicting_pair=conflict,
    )


def greedy_edge_coloring(g: Graph) -> EdgeColoring:
    """First-fit proper edge coloring in edge-id order; uses <= 2*Delta - 1 colors."""
    assignment = {}
    for eid in range(g.m):
        used = {assignment[f] for f in g.edge_neighbors(eid) if f in assignment}
        c = 1
        while c in used:
            c += 1
        assignment[eid] = c
    return EdgeColoring(assignment, g.max_degree)


@dataclass
class MatchingPartition:
    """Edge sets covering every edge incident to U exactly once, grouped by
    base-coloring class (ascending class index; ties are the paper's silence,
    fixed here for determinism)."""

    matchings: list
    colors: list

    def covered_edges(self):
        out = set()
        for m in self.matchings:
            out |= set(m)
        return out


def canonical_matchings(g: Graph, base: EdgeColoring, w: int, U, _checked=False) -> MatchingPartition:
    """Partition the edges incident to U into matchings keyed by the base
    coloring's classes.  Deterministic given the same base coloring.

    ``_checked=True`` skips re-validating the base coloring (callers that
    already verified it once and fan out over many U sets)."""
    if not _checked:
        rep = verify_edge_coloring(g, base)
        if not rep.proper:
            raise ImproperColoringError(f"base coloring conflicts on pair {rep.conflicting_pair}")
    U = set(U)
    neighbors_of_w = {g.other_end(eid, w) for eid in g.incident(w)}
    if not U <= neighbors_of_w:
        raise GraphError(f"U is not a subset of N({w})")
    touched = sorted({eid for x in U for eid in g.incident(x)})
    by_class = {}
    for eid in touched:
        by_class.setdefault(base.color(eid), []).append(eid)
    colors = sorted(by_class)
    return MatchingPartition([sorted(by_class[c]) for c in colors], colors)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _gen_path(n):
    if n < 1:
        raise GraphError("path needs n >= 1")
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def _gen_cycle(n):
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def _gen_complete_bipartite(a, b):
    if a < 1 or b < 1:
        raise GraphError("complete_bipartite needs both sides nonempty")
    return Graph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def _gen_star_lb(delta, reps=1):
    """Adversarial construction: `delta` stars of degree delta - 1, their
    centers all joined to one fresh root; star edges arrive first and the
    connecting edges last.  One copy has delta*(delta-1) + delta edges and
    delta*(delta-1) + delta + 1 vertices; `reps` disjoint copies are emitted.
    """
    if delta < 2:
        raise GraphError("star_lb needs delta >= 2")
    edges = []
    star_edges = []
    connector_edges = []
    base = 0
    for _ in range(reps):
        centers = []
        for _j in range(delta):
            center = base
            base += 1
            centers.append(center)
            for _leaf in range(delta - 1):
                leaf = base
                base += 1
                star_edges.append(len(edges))
                edges.append((center, leaf))
        root = base
        base += 1
        for center in centers:
            connector_edges.append(len(edges))
            edges.append((center, root))
    order = star_edges + connector_edges
    g = Graph(base, edges, arrival_order=order)
    g.meta["kind"] = "star_lb"
    g.meta["star_edges"] = star_edges
    g.meta["connector_edges"] = connector_edges
    return g


def _gen_random_max_deg(n, delta, rng):
    """Layered random matchings: delta layers, each adding at most one edge
    per vertex, so the degree cap is exact by construction."""
    if delta >= n:
        raise GraphError(f"random_max_deg needs delta < n (got delta={delta}, n={n})")
    if delta < 1:
        raise GraphError("random_max_deg needs delta >= 1")
    edges = set()
    for _layer in range(delta):
        perm = list(range(n))
        rng.shuffle(perm)
        for i in range(0, n - 1, 2):
            u, v = perm[i], perm[i + 1]
            key = (min(u, v), max(u, v))
            edges.add(key)
    return Graph(n, sorted(edges))


def generate(kind, params, seed=0):
    """Build a named instance; deterministic per (kind, params, seed)."""
    rng = random.Random(seed)
    if kind == "path":
        g = _gen_path(params["n"])
    elif kind == "cycle":
        g = _gen_cycle(params["n"])
    elif kind == "star_lb":
        g = _gen_star_lb(params["delta"], params.get("reps", 1))
    elif kind == "random_max_deg":
        g = _gen_random_max_deg(params["n"], params["delta"], rng)
    elif kind == "complete_bipartite":
        g = _gen_complete_bipartite(params["a"], params["b"])
    else:
        raise GraphError(f"unknown generator kind {kind!r}")
    g.meta.setdefault("kind", kind)
    g.meta["params"] = dict(params)
    g.meta["seed"] = seed
    return g


# ---------------------------------------------------------------------------
# JSON round-tripping
# ---------------------------------------------------------------------------


def graph_to_json(g: Graph) -> str:
    doc = {"n": g.n, "edges": [[u, v] for (u, v) in g.edges]}
    if g.arrival_order is not None:
        doc["arrival_order"] = list(g.arrival_order)
    if g.meta:
        doc["meta"] = g.meta
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def graph_from_json(text: str) -> Graph:
    doc = json.loads(text)
    return Graph(
        doc["n"],
        [tuple(e) for e in doc["edges"]],
        arrival_order=doc.get("arrival_order"),
        meta=doc.get("meta"),
    )
