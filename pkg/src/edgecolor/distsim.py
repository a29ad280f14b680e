"""Synchronous message-passing simulator with LOCAL/CONGEST accounting, plus
the degree-reduction toolkit: identifier compression, sinkless orientation,
degree splitting, and the end-to-end bandwidth-limited coloring pipeline.

Round accounting: nodes execute in lockstep against round-start snapshots;
in CONGEST mode a logical round that queues k*B bits on some channel costs
ceil(k) physical rounds.  Bit counts come from the actual field widths of
the encoded messages, never from estimates.

Degree splitting follows the virtual-graph recursion: split every node into
degree-3 stubs, compute a sinkless orientation, let each node pair up the
edges it controls into length-2 virtual paths, and recurse; at the bottom
the surviving virtual paths are labeled by an Euler-tour alternation that is
aware of each path's parity, and unfolding colors every path's interior
edges alternatingly, so interior vertices split perfectly and the leftover
discrepancy concentrates at path endpoints (the measured gamma).
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

from edgecolor.graph import Graph, EdgeColoring, GraphError, greedy_edge_coloring, verify_edge_coloring
from edgecolor.scheduling import build_schedule, _Run


class SimError(RuntimeError):
    pass


@dataclass
class Network:
    graph: Graph
    mode: str = "local"  # "local" | "congest"
    bandwidth_bits: int = 32

    def __post_init__(self):
        if self.mode not in ("local", "congest"):
            raise SimError(f"unknown mode {self.mode!r}")
        if self.mode == "congest" and self.bandwidth_bits < 1:
            raise SimError("congest mode needs a positive bandwidth")


@dataclass
class RoundTrace:
    rows: list = field(default_factory=list)  # (round, max_bits, total_msgs)
    physical_rounds: int = 0
    logical_rounds: int = 0
    total_messages: int = 0
    congestion_histogram: dict = field(default_factory=dict)
    max_channel_bits: int = 0

    def record(self, rnd, channel_bits, bandwidth, mode):
        max_bits = max(channel_bits.values(), default=0)
        msgs = sum(1 for b in channel_bits.values() if b > 0)
        self.rows.append((rnd, max_bits, msgs))
        self.logical_rounds += 1
        self.total_messages += msgs
        self.max_channel_bits = max(self.max_channel_bits, max_bits)
        for bits in channel_bits.values():
            if bits > 0:
                self.congestion_histogram[bits] = self.congestion_histogram.get(bits, 0) + 1
        if mode == "congest":
            self.physical_rounds += max(1, -(-max_bits // bandwidth))
        else:
            self.physical_rounds += 1

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# edgecolor-roundtrace schema=1\n")
            fh.write("round,max_bits,total_msgs\n")
            for rnd, mb, tm in self.rows:
                fh.write(f"{rnd},{mb},{tm}\n")


def run_rounds(network: Network, node_program, init_states=None, round_cap=100000):
    """Lockstep execution until every node halts and no message is in flight.

    node_program(node, state, inbox, rnd) -> (state, outbox, halted) where
    inbox is a list of (src, (bits, payload)) and outbox maps neighbor ->
    list of (bits, payload) messages."""
    g = network.graph
    states = list(init_states) if init_states is not None else [None] * g.n
    inboxes = [[] for _ in range(g.n)]
    halted = [False] * g.n
    trace = RoundTrace()
    rnd = 0
    while True:
        pending = any(inboxes[v] for v in range(g.n))
        if all(halted) and not pending:
            break
        if rnd >= round_cap:
            raise SimError(f"round cap {round_cap} exceeded; trace rows={len(trace.rows)}")
        rnd += 1
        new_inboxes = [[] for _ in range(g.n)]
        channel_bits = {}
        for v in range(g.n):
            inbox = inboxes[v]
            if halted[v] and not inbox:
                continue
            states[v], outbox, is_halted = node_program(v, states[v], inbox, rnd)
            halted[v] = is_halted
            for dst, msgs in (outbox or {}).items():
                if dst == v or not any(g.other_end(eid, v) == dst for eid in g.incident(v)):
                    raise SimError(f"node {v} sent to non-neighbor {dst}")
                for bits, payload in msgs:
                    channel_bits[(v, dst)] = channel_bits.get((v, dst), 0) + bits
                    new_inboxes[dst].append((v, (bits, payload)))
        inboxes = new_inboxes
        trace.record(rnd, channel_bits, network.bandwidth_bits, network.mode)
    return states, trace


# ---------------------------------------------------------------------------
# Identifier compression
# ---------------------------------------------------------------------------


@dataclass
class IdMap:
    ids: list
    bits: int
    palette: int
    radius: int


def compress_ids(g: Graph, r: int) -> IdMap:
    """Greedy proper coloring of G^(2r) used as identifiers: unique within
    every r-ball (in fact within distance 2r); O(log Delta)-bit ids."""
    if r < 1:
        raise SimError("radius must be >= 1")
    ids = [None] * g.n
    for v in range(g.n):
        used = set()
        dist = _vertex_bfs(g, v, 2 * r)
        for u in dist:
            if u != v and ids[u] is not None:
                used.add(ids[u])
        c = 0
        while c in used:
            c += 1
        ids[v] = c
    palette = max(ids, default=0) + 1 if ids else 0
    bits = max(1, math.ceil(math.log2(palette + 1)))
    return IdMap(ids, bits, palette, r)


def _vertex_bfs(g, v, limit):
    dist = {v: 0}
    frontier = deque([v])
    while frontier:
        x = frontier.popleft()
        if dist[x] >= limit:
            continue
        for eid in g.incident(x):
            w = g.other_end(eid, x)
            if w not in dist:
                dist[w] = dist[x] + 1
                frontier.append(w)
    return dist


# ---------------------------------------------------------------------------
# Sinkless orientation
# ---------------------------------------------------------------------------


@dataclass
class Orientation:
    """direction[eid] = (tail, head): the edge points tail -> head."""

    direction: list
    analytic_rounds: float

    def out_degree(self, g, v):
        return sum(1 for eid in g.incident(v) if self.direction[eid][0] == v)


def sinkless_orientation(g: Graph) -> Orientation:
    """Centralized Euler-based orientation: pair odd-degree vertices with
    helper edges, orient along Eulerian circuits, drop helpers.  Every vertex
    of degree >= 3 ends with an outgoing edge; the distributed round cost is
    reported analytically as O(log n)."""
    adj = [[] for _ in range(g.n)]
    for eid, (u, v) in enumerate(g.edges):
        adj[u].append([eid, v])
        adj[v].append([eid, u])
    # helper edges between consecutive odd-degree vertices per component
    helper_id = g.m
    comp_of = [None] * g.n
    comps = []
    for v in range(g.n):
        if comp_of[v] is None and g.degree(v) > 0:
            comp = []
            stack = [v]
            comp_of[v] = len(comps)
            while stack:
                x = stack.pop()
                comp.append(x)
                for eid in g.incident(x):
                    w = g.other_end(eid, x)
                    if comp_of[w] is None:
                        comp_of[w] = len(comps)
                        stack.append(w)
            comps.append(comp)
    helpers = set()
    for comp in comps:
        odd = [v for v in comp if len(adj[v]) % 2 == 1]
        for i in range(0, len(odd) - 1, 2):
            a, b = odd[i], odd[i + 1]
            adj[a].append([helper_id, b])
            adj[b].append([helper_id, a])
            helpers.add(helper_id)
            helper_id += 1
    direction = [None] * g.m
    used = set()
    ptr = [0] * g.n
    for comp in comps:
        for start in comp:
            if ptr[start] >= len(adj[start]):
                continue
            # Hierholzer from start, orienting along the traversal
            stack = [start]
            path = []
            while stack:
                x = stack[-1]
                advanced = False
                while ptr[x] < len(adj[x]):
                    eid, w = adj[x][ptr[x]]
                    ptr[x] += 1
                    if eid in used:
                        continue
                    used.add(eid)
                    stack.append(w)
                    path.append((eid, x, w))
                    advanced = True
                    break
                if not advanced:
                    stack.pop()
            for eid, x, w in path:
                if eid < g.m:
                    direction[eid] = (x, w)
    analytic = math.log(max(g.n, 2), 2)
    return Orientation(direction, analytic)


def check_sinkless(g: Graph, orientation: Orientation):
    sinks = []
    for v in range(g.n):
        if g.degree(v) >= 3 and orientation.out_degree(g, v) == 0:
            sinks.append(v)
    return sinks


# ---------------------------------------------------------------------------
# Degree splitting
# ---------------------------------------------------------------------------


@dataclass
class SplitAssignment:
    q: list  # edge -> +1 / -1
    discrepancy: list  # per-vertex |sum of q over incident edges|
    gamma: int  # max_v (|disc(v)| - eta*d(v)), rounded up, >= 0
    eta: float
    recursion_depth: int
    max_path_len: int

    def max_discrepancy(self):
        return max(self.discrepancy, default=0)


class _VirtualEdge:
    __slots__ = ("u", "v", "path")

    def __init__(self, u, v, path):
        self.u = u
        self.v = v
        self.path = path  # original edge ids ordered from u to v

    def reversed(self):
        return _VirtualEdge(self.v, self.u, list(reversed(self.path)))


def degree_split(g: Graph, eta: float, max_path_len: int = 64) -> SplitAssignment:
    """+1/-1 edge labeling with per-vertex discrepancy <= eta*d(v) + gamma."""
    if eta <= 0:
        raise SimError("eta must be positive")
    depth = max(1, math.ceil(math.log(1 / eta, 1.5))) if eta < 1 else 1
    virtual = [ _VirtualEdge(u, v, [eid]) for eid, (u, v) in enumerate(g.edges) ]
    realized_depth = 0
    for _level in range(depth):
        merged = _pair_level(g.n, virtual, max_path_len)
        if merged is None:
            break
        virtual = merged
        realized_depth += 1
    q = [0] * g.m
    _euler_label(g.n, virtual, q)
    disc = []
    for v in range(g.n):
        disc.append(abs(sum(q[eid] for eid in g.incident(v))))
    gamma = 0
    for v in range(g.n):
        slack = disc[v] - eta * g.degree(v)
        gamma = max(gamma, math.ceil(slack))
    longest = max((len(ve.path) for ve in virtual), default=0)
    return SplitAssignment(q, disc, max(0, gamma), eta, realized_depth, longest)


def _pair_level(n, virtual, max_path_len):
    """One recursion level: degree-3 stubs, sinkless orientation, pair the
    controlled edges of each node into length-2 virtual paths."""
    inc = [[] for _ in range(n)]
    for i, ve in enumerate(virtual):
        inc[ve.u].append(i)
        inc[ve.v].append(i)
    # split nodes: (v, group) of <= 3 incident virtual edges each
    stub_of = {}
    stubs = []
    for v in range(n):
        for gi in range(0, len(inc[v]), 3):
            sid = len(stubs)
            group = inc[v][gi : gi + 3]
            stubs.append((v, group))
            for i in group:
                stub_of[(v, i)] = sid
    sedges = []
    for i, ve in enumerate(virtual):
        sedges.append((stub_of[(ve.u, i)], stub_of[(ve.v, i)]))
    try:
        sg = Graph(len(stubs), sedges, allow_parallel=True)
    except GraphError:
        return None  # self-loop at a stub; degenerate level, stop recursing
    orient = sinkless_orientation(sg)
    controlled = [[] for _ in range(n)]
    for sid, (v, group) in enumerate(stubs):
        if len(group) < 3:
            continue  # remainder stubs carry no guarantee
        outs = [i for i in group if orient.direction[i] is not None and orient.direction[i][0] == sid]
        if outs:
            controlled[v].append(min(outs))
    consumed = set()
    new_edges = []
    progress = False
    for v in range(n):
        own = [i for i in controlled[v] if i not in consumed]
        own.sort()
        j = 0
        while j + 1 < len(own):
            a, b = own[j], own[j + 1]
            va, vb = virtual[a], virtual[b]
            ea = va if va.u == v else va.reversed()  # oriented v -> other
            eb = vb if vb.u == v else vb.reversed()
            if ea.v == eb.v or len(ea.path) + len(eb.path) > max_path_len:
                j += 1
                continue
            merged = _VirtualEdge(ea.v, eb.v, list(reversed(ea.path)) + eb.path)
            new_edges.append(merged)
            consumed.add(a)
            consumed.add(b)
            progress = True
            j += 2
    if not progress:
        return None
    out = [ve for i, ve in enumerate(virtual) if i not in consumed]
    out.extend(new_edges)
    return out


def _euler_label(n, virtual, q):
    """Parity-aware Euler alternation over the virtual edges, then unfold:
    consecutive tour edges at a vertex contribute opposite signs, so every
    balanced visit cancels; interiors of unfolded paths cancel by the
    alternating labels."""
    adj = [[] for _ in range(n)]
    for i, ve in enumerate(virtual):
        adj[ve.u].append([i, ve.v, True])   # True: traversing u -> v
        adj[ve.v].append([i, ve.u, False])
    helper = object()
    for comp_nodes in _components(n, virtual):
        odd = [v for v in comp_nodes if len(adj[v]) % 2 == 1]
        for i in range(0, len(odd) - 1, 2):
            a, b = odd[i], odd[i + 1]
            adj[a].append([helper, b, None])
            adj[b].append([helper, a, None])
    ptr = [0] * n
    visited = set()
    for comp_nodes in _components(n, virtual):
        for start in comp_nodes:
            if ptr[start] >= len(adj[start]):
                continue
            stack = [start]
            tour = []
            while stack:
                x = stack[-1]
                advanced = False
                while ptr[x] < len(adj[x]):
                    item, w, forward = adj[x][ptr[x]]
                    ptr[x] += 1
                    key = (item, min(x, w), max(x, w)) if item is helper else item
                    if key in visited:
                        continue
                    visited.add(key)
                    stack.append(w)
                    tour.append((item, x, forward))
                    advanced = True
                    break
                if not advanced:
                    stack.pop()
            sign = 1
            for item, x, forward in tour:
                if item is helper:
                    continue
                ve = virtual[item]
                near = sign
                path = ve.path if forward else list(reversed(ve.path))
                s = near
                for eid in path:
                    q[eid] = s
                    s = -s
                far = near * (1 if len(ve.path) % 2 == 1 else -1)
                sign = -far


def _components(n, virtual):
    adj = [[] for _ in range(n)]
    for ve in virtual:
        adj[ve.u].append(ve.v)
        adj[ve.v].append(ve.u)
    seen = [False] * n
    comps = []
    for v in range(n):
        if seen[v] or not adj[v]:
            continue
        comp = []
        stack = [v]
        seen[v] = True
        while stack:
            x = stack.pop()
            comp.append(x)
            for w in adj[x]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(comp)
    return comps


@dataclass
class SplitResult:
    subgraphs: list  # Graph views with meta["parent_edge_ids"]
    levels: int
    eta: float
    deltas_per_level: list
    bound_per_level: list
    sum_subgraph_deltas: int


def split_to_max_degree(g: Graph, delta_target: int, eps: float, max_path_len=64) -> SplitResult:
    """Recursive halving: k = ceil(log2(Delta/target)) split levels with
    eta = eps/(2k); returns 2^k edge-disjoint subgraphs whose max degrees
    track ((1+eta)/2)^i * Delta plus the geometric gamma tail."""
    delta = g.max_degree
    if delta_target >= delta:
        raise SimError("delta_target must be below the max degree")
    k = math.ceil(math.log2(delta / delta_target))
    eta = eps / (2 * k)
    gamma_ceiling = 4
    parts = [list(range(g.m))]
    deltas_per_level = [delta]
    bound_per_level = [float(delta)]
    for level in range(k):
        nxt = []
        for edge_ids in parts:
            sub = g.subgraph_of_edges(edge_ids)
            if sub.m == 0:
                nxt.append([])
                nxt.append([])
                continue
            assignment = degree_split(sub, eta, max_path_len=max_path_len)
            plus, minus = [], []
            for local_eid, parent in enumerate(sub.meta["parent_edge_ids"]):
                (plus if assignment.q[local_eid] > 0 else minus).append(parent)
            nxt.append(plus)
            nxt.append(minus)
        parts = nxt
        worst = 0
        for edge_ids in parts:
            if edge_ids:
                worst = max(worst, g.subgraph_of_edges(edge_ids).max_degree)
        deltas_per_level.append(worst)
        prev = bound_per_level[-1]
        bound_per_level.append((prev + eta * prev + gamma_ceiling) / 2)
    subgraphs = [g.subgraph_of_edges(edge_ids) for edge_ids in parts]
    return SplitResult(
        subgraphs=subgraphs,
        levels=k,
        eta=eta,
        deltas_per_level=deltas_per_level,
        bound_per_level=bound_per_level,
        sum_subgraph_deltas=sum(s.max_degree for s in subgraphs),
    )


def closed_form_degree_bound(delta, eta, i, gamma=4):
    """((1+eta)/2)^i * Delta + (gamma/2) * sum_j<i ((1+eta)/2)^j."""
    r = (1 + eta) / 2
    return r**i * delta + gamma / 2 * sum(r**j for j in range(i))


# ---------------------------------------------------------------------------
# CONGEST pipeline
# ---------------------------------------------------------------------------


@dataclass
class StepStats:
    part: int
    step: int
    senders: int
    max_channel_bits: int
    physical_rounds: int
    messages: int


@dataclass
class PipelineResult:
    coloring: EdgeColoring
    trace: RoundTrace
    steps: list
    parts: int
    small_delta_branch: bool
    delta_target: int
    tuple_bits: int
    id_bits: int
    value_bits: int
    analytic: dict

    def max_step_bits(self):
        return max((s.max_channel_bits for s in self.steps), default=0)


def _tuple_bits(sub: Graph, id_bits: int, delta: int) -> tuple:
    """Actual width of a pushed per-edge tuple: two compressed endpoint ids,
    arrival time, assigned color, branch line tag, and the delta weight
    numerators at grid precision delta^-10."""
    t_bits = max(1, math.ceil(math.log2(sub.m + 1)))
    color_bits = max(1, math.ceil(math.log2(3 * max(delta, 1) + 2)))
    value_bits = max(1, math.ceil(math.log2(max(delta, 2) ** 10 + 1)))
    tag_bits = 3
    total = 2 * id_bits + t_bits + color_bits + tag_bits + delta * value_bits
    return total, value_bits


def _make_flood_program(g: Graph, origins: dict, item_bits: int, hop_limit: int):
    """origins: node -> list of item ids seeded there.  Items flood to every
    node within hop_limit; message size is item_bits per item."""

    def program(v, state, inbox, rnd):
        if state is None:
            state = {"seen": {}, "fresh": [(item, hop_limit) for item in origins.get(v, [])]}
            for item, h in state["fresh"]:
                state["seen"][item] = h
        for _src, (_bits, payload) in inbox:
            item, hops = payload
            if hops > 0 and state["seen"].get(item, -1) < hops:
                state["seen"][item] = hops
                state["fresh"].append((item, hops))
        outbox = {}
        for item, hops in state["fresh"]:
            if hops <= 0:
                continue
            for eid in g.incident(v):
                w = g.other_end(eid, v)
                outbox.setdefault(w, []).append((item_bits, (item, hops - 1)))
        state["fresh"] = []
        return state, outbox, True

    return program


def congest_pipeline(
    g: Graph,
    eps: float,
    seed=0,
    bandwidth_bits: int | None = None,
    delta_target: int | None = None,
    split_constant: float = 1.0,
    round_cap: int = 100000,
) -> PipelineResult:
    """Split to max degree ~ sqrt(log n), then color each part with the
    deterministic conflict-graph schedule while pushing the stored tuples of
    just-colored edges five hops through the part's own channels, measuring
    congestion; parts use disjoint palettes so the merged coloring is proper.

    Below the split target the pipeline degenerates to sequential greedy
    with 2*Delta - 1 colors."""
    n = max(g.n, 2)
    if bandwidth_bits is None:
        bandwidth_bits = max(8, 2 * math.ceil(math.log2(n)))
    delta = g.max_degree
    if delta_target is None:
        delta_target = max(4, math.ceil(split_constant * math.sqrt(math.log2(n))))
    analytic = {
        "schedule_build_rounds": "O(Delta'^5 log* n + Delta'^4 ceil(Delta'^2 log Delta'/log n)) [analytical]",
        "degree_split_rounds": "O(eta^-1 log n per level) [analytical]",
        "sinkless_orientation_rounds": "O(log n) [analytical]",
    }
    if delta <= delta_target:
        base = greedy_edge_coloring(g)
        return PipelineResult(
            coloring=base,
            trace=RoundTrace(),
            steps=[],
            parts=1,
            small_delta_branch=True,
            delta_target=delta_target,
            tuple_bits=0,
            id_bits=0,
            value_bits=0,
            analytic=dict(analytic, small_delta=f"greedy 2*Delta-1 in O(Delta+log* n)"),
        )

    split = split_to_max_degree(g, delta_target, eps)
    merged = {}
    offset = 0
    agg_trace = RoundTrace()
    steps = []
    tuple_bits = id_bits = value_bits = 0
    for pi, sub in enumerate(split.subgraphs):
        if sub.m == 0:
            continue
        idmap = compress_ids(sub, 5)
        tb, vb = _tuple_bits(sub, idmap.bits, max(sub.max_degree, 1))
        tuple_bits = max(tuple_bits, tb)
        id_bits = max(id_bits, idmap.bits)
        value_bits = max(value_bits, vb)
        schedule = build_schedule(sub, "conflict")
        run = _Run(sub, "deterministic", eps, seed)
        net = Network(sub, mode="congest", bandwidth_bits=bandwidth_bits)
        prev_class: list = []
        for si, cls in enumerate(schedule.classes):
            if prev_class:
                origins = {}
                for e in prev_class:
                    u, v = sub.edges[e]
                    origins.setdefault(u, []).append(("tuple", e, u))
                    origins.setdefault(v, []).append(("tuple", e, v))
                program = _make_flood_program(sub, origins, tb, hop_limit=5)
                _states, trace = run_rounds(net, program, round_cap=round_cap)
                steps.append(
                    StepStats(
                        part=pi,
                        step=si,
                        senders=len(prev_class),
                        max_channel_bits=trace.max_channel_bits,
                        physical_rounds=trace.physical_rounds,
                        messages=trace.total_messages,
                    )
                )
                agg_trace.rows.extend(trace.rows)
                agg_trace.physical_rounds += trace.physical_rounds
                agg_trace.logical_rounds += trace.logical_rounds
                agg_trace.total_messages += trace.total_messages
                agg_trace.max_channel_bits = max(agg_trace.max_channel_bits, trace.max_channel_bits)
                for k, cnt in trace.congestion_histogram.items():
                    agg_trace.congestion_histogram[k] = agg_trace.congestion_histogram.get(k, 0) + cnt
            members = sorted(cls)
            decisions = {e: run.decide(e) for e in members}
            for e in members:
                run.commit(e, decisions[e])
            prev_class = members
        col = run.coloring()
        top = 0
        for local_eid, parent in enumerate(sub.meta["parent_edge_ids"]):
            c = col.color(local_eid)
            merged[parent] = offset + c
            top = max(top, c)
        offset += top
    coloring = EdgeColoring(merged, offset)
    rep = verify_edge_coloring(g, coloring)
    if not rep.proper:
        raise SimError(f"pipeline produced an improper coloring: {rep.conflicting_pair}")
    return PipelineResult(
        coloring=coloring,
        trace=agg_trace,
        steps=steps,
        parts=len(split.subgraphs),
        small_delta_branch=False,
        delta_target=delta_target,
        tuple_bits=tuple_bits,
        id_bits=id_bits,
        value_bits=value_bits,
        analytic=analytic,
    )
