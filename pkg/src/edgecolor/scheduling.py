"""Parallel schedules for the sequential-local coloring algorithm.

Two edges can be processed in the same step only when neither's decision can
see the other's: either they are far apart (distance-ell schedule) or they
avoid the sharper conflict relation, which connects edges e and f when
d(e, f) <= 3 or when some chain of edges e,a,b,c,d,f exists with a and d in
the same class of the fixed base coloring (the pattern through which two
distant edges can feed the same matching potential).  The conflict relation
has maximum degree O(Delta^4), a Delta cheaper than the distance-5 relation.

Executing a schedule means: per class, compute every member's decision
against the pre-class state, then commit the decisions in edge-id order.
The output must be bitwise identical to the sequential run under the induced
order (class index, then edge id); that equivalence is a tested contract,
not an aspiration.

A network decomposition of the (ell+2)-power graph gives the alternative
executor: per class, per cluster, gather and run the sequential algorithm
internally, which is exact by the same independence argument.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field

from edgecolor.graph import (
    EdgeColoring,
    Graph,
    ImproperColoringError,
    greedy_edge_coloring,
    verify_edge_coloring,
)
from edgecolor.online import (
    SAMPLE_PATH,
    FixedChooser,
    RandomizedChooser,
    classify_arrival,
    init_state,
    process_edge,
)
from edgecolor.params import Params
from edgecolor.potentials import DeterministicChooser, register_potentials


class ScheduleError(RuntimeError):
    pass


@dataclass
class ConflictGraph:
    """Nodes are edge ids of the underlying graph; adjacency marks pairs that
    cannot share a schedule step."""

    n_nodes: int
    adj: list

    @property
    def max_degree(self):
        return max((len(a) for a in self.adj), default=0)

    def pairs(self):
        out = set()
        for e, nbrs in enumerate(self.adj):
            for f in nbrs:
                out.add((min(e, f), max(e, f)))
        return out


def _check_base(g, base):
    rep = verify_edge_coloring(g, base)
    if not rep.proper:
        raise ImproperColoringError(f"base coloring conflicts on {rep.conflicting_pair}")
    if base.max_color() > 2 * max(g.max_degree, 1):
        raise ImproperColoringError("base coloring must use <= 2*Delta colors")


def build_conflict_graph(g: Graph, base: EdgeColoring) -> ConflictGraph:
    """Conflict rule: d(e,f) <= 3, or a length-5 chain e,a,b,c,d,f whose
    inner edges a and d share a base-coloring class."""
    _check_base(g, base)
    adj = [set() for _ in range(g.m)]
    nbrs = [set(g.edge_neighbors(e)) for e in range(g.m)]

    # distance <= 3
    for e in range(g.m):
        for f in g.ball_depths(e, 3):
            if f != e:
                adj[e].add(f)

    # chain rule via three-step walk composition, then same-class endpoints
    reach = [None] * g.m
    for a in range(g.m):
        n1 = nbrs[a]
        n2 = set()
        for x in n1:
            n2 |= nbrs[x]
        n3 = set()
        for y in n2:
            n3 |= nbrs[y]
        reach[a] = n3
    spread = [set() for _ in range(g.m)]  # edges f reachable from a through a same-class d
    for a in range(g.m):
        ca = base.color(a)
        for d in reach[a]:
            if base.color(d) == ca:
                spread[a] |= nbrs[d]
    for e in range(g.m):
        extra = set()
        for a in nbrs[e]:
            extra |= spread[a]
        extra.discard(e)
        adj[e] |= extra

    for e in range(g.m):
        for f in adj[e]:
            adj[f].add(e)
    return ConflictGraph(g.m, adj)


def conflict_pairs_bruteforce(g: Graph, base: EdgeColoring) -> set:
    """O(m^2) oracle evaluating both conflict rules pair by pair."""
    _check_base(g, base)
    nbrs = [set(g.edge_neighbors(e)) for e in range(g.m)]
    pairs = set()
    for e in range(g.m):
        for f in range(e + 1, g.m):
            d = g.line_distance(e, f)
            if isinstance(d, int) and d <= 3:
                pairs.add((e, f))
                continue
            found = False
            for a in nbrs[e]:
                ca = base.color(a)
                for b in nbrs[a]:
                    for c in nbrs[b]:
                        for dd in nbrs[c]:
                            if base.color(dd) == ca and f in nbrs[dd]:
                                found = True
                                break
                        if found:
                            break
                    if found:
                        break
                if found:
                    break
            if found:
                pairs.add((e, f))
    return pairs


def distance_l_edge_coloring(g: Graph, ell: int) -> EdgeColoring:
    """Greedy coloring of the ell-th line-graph power: edges within line
    distance ell get distinct colors; palette <= maxdeg(L^ell) + 1."""
    if ell < 1:
        raise ScheduleError("ell must be >= 1")
    assignment = {}
    for e in range(g.m):
        used = {assignment[f] for f in g.ball_depths(e, ell) if f in assignment}
        c = 1
        while c in used:
            c += 1
        assignment[e] = c
    return EdgeColoring(assignment, g.max_degree)


def reduce_palette(conflict: ConflictGraph, initial: dict):
    """Color-try reduction: cycle through target colors ascending, one global
    try per round; a node adopts the round's color when no committed conflict
    neighbor holds it and no trying neighbor precedes it in (initial color,
    id) priority.  Returns (coloring, rounds); palette <= 2*maxdeg + 1."""
    n = conflict.n_nodes
    for x in range(n):
        for y in conflict.adj[x]:
            if initial[x] == initial[y]:
                raise ImproperColoringError(
                    f"initial coloring is improper on conflict pair ({x},{y})"
                )
    palette = 2 * conflict.max_degree + 1
    committed = {}
    uncommitted = set(range(n))
    rounds = 0
    while uncommitted:
        progress = False
        for q in range(1, palette + 1):
            if not uncommitted:
                break
            rounds += 1
            trying = {
                x
                for x in uncommitted
                if all(committed.get(y) != q for y in conflict.adj[x])
            }
            adopters = [
                x
                for x in trying
                if all(
                    (initial[x], x) < (initial[y], y)
                    for y in conflict.adj[x]
                    if y in trying
                )
            ]
            for x in adopters:
                committed[x] = q
                uncommitted.discard(x)
                progress = True
        if not progress:
            raise ScheduleError("palette reduction stalled; conflict graph inconsistent")
    return committed, rounds


@dataclass
class Schedule:
    """Ordered partition of the edges into simultaneously processable classes."""

    classes: list
    builder: str
    params: dict = field(default_factory=dict)

    def induced_order(self):
        return [e for cls in self.classes for e in sorted(cls)]

    def to_json(self):
        return json.dumps(
            {
                "schema": 1,
                "classes": [sorted(cls) for cls in self.classes],
                "builder": self.builder,
                "params": self.params,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(text):
        doc = json.loads(text)
        return Schedule(
            classes=[list(c) for c in doc["classes"]],
            builder=doc["builder"],
            params=doc.get("params", {}),
        )


def schedule_from_coloring(coloring: dict, builder: str, params=None) -> Schedule:
    classes = {}
    for node, c in coloring.items():
        classes.setdefault(c, []).append(node)
    return Schedule(
        classes=[sorted(classes[c]) for c in sorted(classes)],
        builder=builder,
        params=params or {},
    )


def build_schedule(g: Graph, builder: str = "conflict", ell: int = 5, base=None) -> Schedule:
    if builder == "conflict":
        base = base or greedy_edge_coloring(g)
        cg = build_conflict_graph(g, base)
        initial = {e: distance_l_edge_coloring(g, 5).color(e) for e in range(g.m)}
        coloring, rounds = reduce_palette(cg, initial)
        return schedule_from_coloring(
            coloring, "conflict", {"rounds": rounds, "palette": max(coloring.values(), default=0)}
        )
    if builder == "distance-l":
        col = distance_l_edge_coloring(g, ell)
        return schedule_from_coloring(
            {e: col.color(e) for e in range(g.m)}, "distance-l", {"ell": ell}
        )
    raise ScheduleError(f"unknown schedule builder {builder!r}")


def validate_schedule(g: Graph, schedule: Schedule):
    """Every class must be an independent set of its builder's relation."""
    seen = set()
    for cls in schedule.classes:
        for e in cls:
            if e in seen:
                raise ScheduleError(f"edge {e} appears in two classes")
            seen.add(e)
    if seen != set(range(g.m)):
        raise ScheduleError("schedule classes do not partition the edge set")
    if schedule.builder == "conflict":
        cg = build_conflict_graph(g, greedy_edge_coloring(g))
        for cls in schedule.classes:
            cset = set(cls)
            for e in cls:
                bad = cg.adj[e] & cset
                if bad:
                    raise ScheduleError(f"class contains conflicting pair ({e},{min(bad)})")
    elif schedule.builder == "distance-l":
        ell = schedule.params.get("ell", 5)
        for cls in schedule.classes:
            cset = set(cls)
            for e in cls:
                close = (set(g.ball_depths(e, ell)) - {e}) & cset
                if close:
                    raise ScheduleError(
                        f"class contains pair ({e},{min(close)}) within distance {ell}"
                    )
    else:
        raise ScheduleError(f"cannot validate builder {schedule.builder!r}")


class _Run:
    """One algorithm execution whose arrivals are driven externally."""

    def __init__(self, g, algorithm, eps, seed, constants=None, mode="exact", budget=10**6):
        self.g = g
        self.algorithm = algorithm
        self.seed = seed
        self.params = Params(max(g.max_degree, 1), eps, **(constants or {}))
        self.state = init_state(g, self.params)
        self.pstate = None
        if algorithm == "deterministic":
            base = greedy_edge_coloring(g)
            self.pstate = register_potentials(g, base, self.params, mode=mode, budget=budget)
            self.chooser = DeterministicChooser(self.pstate)
        elif algorithm == "randomized":
            self.chooser = RandomizedChooser(seed)
        else:
            raise ScheduleError(f"unknown algorithm {algorithm!r}")

    def decide(self, e):
        branch, _c = classify_arrival(self.state, e)
        if branch == SAMPLE_PATH:
            return self.chooser.choose(self.state, e)
        return None

    def commit(self, e, outcome):
        fixed = FixedChooser({e: outcome} if outcome is not None else {}, rng_seed=self.seed)
        process_edge(self.state, e, fixed, pstate=self.pstate)

    def coloring(self):
        return EdgeColoring(
            {e: self.state.final_color[e] for e in range(self.g.m)}, self.params.delta
        )


def execute_schedule(
    g: Graph,
    schedule: Schedule,
    algorithm: str,
    eps: float = 0.3,
    seed=0,
    constants=None,
    validate: bool = True,
) -> EdgeColoring:
    """Process classes in order; within a class every decision is computed
    against the pre-class state, then committed in edge-id order.  Bitwise
    identical to the sequential run under the induced order."""
    if validate:
        validate_schedule(g, schedule)
    run = _Run(g, algorithm, eps, seed, constants)
    for cls in schedule.classes:
        members = sorted(cls)
        decisions = {e: run.decide(e) for e in members}  # reads only, pre-class state
        for e in members:
            run.commit(e, decisions[e])
    return run.coloring()


# ---------------------------------------------------------------------------
# Network decomposition
# ---------------------------------------------------------------------------


@dataclass
class NetworkDecomposition:
    """Classes of clusters; same-class clusters pairwise non-adjacent in
    G^(ell+2).  c = number of classes, d = max cluster diameter measured in
    (ell+2)-hop units."""

    classes: list  # class -> list of clusters -> sorted vertex lists
    ell: int
    c: int
    d: int
    cluster_diam_g: int


def _bfs_dists(g, sources, limit=None):
    dist = {s: 0 for s in sources}
    frontier = deque(sources)
    while frontier:
        v = frontier.popleft()
        if limit is not None and dist[v] >= limit:
            continue
        for eid in g.incident(v):
            w = g.other_end(eid, v)
            if w not in dist:
                dist[w] = dist[v] + 1
                frontier.append(w)
    return dist


def nd_decompose(g: Graph, ell: int, seed=0) -> NetworkDecomposition:
    """Seeded ball carving in the (ell+2)-power metric, then greedy coloring
    of the cluster-adjacency graph into classes.  Validity (same-class
    clusters farther than ell+2 apart in G) holds by construction and is
    re-checked by validate_decomposition."""
    L = ell + 2
    rng = random.Random(seed)
    n = g.n
    if n == 0:
        return NetworkDecomposition([], ell, 0, 0, 0)
    cap = max(1, (n - 1).bit_length())
    radii = {}
    for v in range(n):
        r = 1
        while r < cap and rng.random() < 0.5:
            r += 1
        radii[v] = r * L
    # Claim propagation: vertex u joins the center maximizing radius - dist.
    best = {}  # u -> (margin, -center, center)
    order = sorted(range(n), key=lambda v: (-radii[v], v))
    for v in order:
        dist = _bfs_dists(g, [v], limit=radii[v])
        for u, du in dist.items():
            margin = radii[v] - du
            key = (margin, -v)
            if u not in best or key > best[u][0]:
                best[u] = (key, v)
    centers = {}
    for u in range(n):
        centers.setdefault(best[u][1] if u in best else u, []).append(u)
    # Split any cluster that is not connected in G.
    clusters = []
    for _center, members in sorted(centers.items()):
        members = set(members)
        while members:
            start = min(members)
            comp = set()
            frontier = deque([start])
            comp.add(start)
            while frontier:
                v = frontier.popleft()
                for eid in g.incident(v):
                    w = g.other_end(eid, v)
                    if w in members and w not in comp:
                        comp.add(w)
                        frontier.append(w)
            clusters.append(sorted(comp))
            members -= comp
    # Cluster adjacency in G^(ell+2), then greedy classes.
    cluster_of = {}
    for i, cl in enumerate(clusters):
        for v in cl:
            cluster_of[v] = i
    touching = [set() for _ in clusters]
    for i, cl in enumerate(clusters):
        dist = _bfs_dists(g, cl, limit=L)
        for u in dist:
            j = cluster_of[u]
            if j != i:
                touching[i].add(j)
                touching[j].add(i)
    color = {}
    for i in sorted(range(len(clusters)), key=lambda i: (-len(clusters[i]), i)):
        used = {color[j] for j in touching[i] if j in color}
        c = 0
        while c in used:
            c += 1
        color[i] = c
    n_classes = max(color.values()) + 1 if color else 0
    classes = [[] for _ in range(n_classes)]
    for i, cl in enumerate(clusters):
        classes[color[i]].append(cl)
    for cls in classes:
        cls.sort(key=lambda cl: cl[0])
    diam_g = 0
    for cl in clusters:
        dist = _bfs_dists(g, [cl[0]])
        ecc = max(dist.get(v, 0) for v in cl)
        # eccentricity from one endpoint bounds diameter within factor 2
        dist2 = _bfs_dists(g, [max(cl, key=lambda v: dist.get(v, 0))])
        diam_g = max(diam_g, max(dist2.get(v, 0) for v in cl))
    d_power = -(-diam_g // L)
    return NetworkDecomposition(classes, ell, n_classes, d_power, diam_g)


def validate_decomposition(g: Graph, decomp: NetworkDecomposition):
    """Partition check plus pairwise same-class cluster distance > ell+2."""
    L = decomp.ell + 2
    seen = set()
    for cls in decomp.classes:
        for cl in cls:
            for v in cl:
                if v in seen:
                    raise ScheduleError(f"vertex {v} in two clusters")
                seen.add(v)
    if seen != set(range(g.n)):
        raise ScheduleError("decomposition does not cover the vertex set")
    for cls in decomp.classes:
        member_of = {}
        for idx, cl in enumerate(cls):
            for v in cl:
                member_of[v] = idx
        for idx, cl in enumerate(cls):
            dist = _bfs_dists(g, cl, limit=L)
            for u in dist:
                j = member_of.get(u)
                if j is not None and j != idx:
                    raise ScheduleError(
                        f"same-class clusters {idx} and {j} within distance {L}"
                    )


def execute_via_nd(
    g: Graph,
    decomp: NetworkDecomposition,
    algorithm: str,
    eps: float = 0.3,
    seed=0,
    constants=None,
    validate: bool = True,
):
    """Per class, per cluster: process the cluster's edges (assigned to their
    max-id endpoint) sequentially in id order.  Output equals the sequential
    run under the induced order; the round estimate charges each class its
    worst cluster gather/broadcast cost."""
    if validate:
        validate_decomposition(g, decomp)
    run = _Run(g, algorithm, eps, seed, constants)
    rounds = 0
    for cls in decomp.classes:
        worst = 0
        for cl in cls:
            cset = set(cl)
            edges = sorted(
                e for e in range(g.m) if max(g.edges[e]) in cset
            )
            for e in edges:
                run.commit(e, run.decide(e))
            if cl:
                dist = _bfs_dists(g, [cl[0]])
                ecc = max(dist.get(v, 0) for v in cl)
                worst = max(worst, 2 * (ecc + decomp.ell + 2) + 1)
        rounds += worst
    return run.coloring(), rounds


def nd_induced_order(g: Graph, decomp: NetworkDecomposition):
    order = []
    for cls in decomp.classes:
        for cl in cls:
            cset = set(cl)
            order.extend(sorted(e for e in range(g.m) if max(g.edges[e]) in cset))
    return order
