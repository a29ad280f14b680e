"""Randomized online edge coloring with a pluggable color chooser.

Each edge keeps a weight P_ec per main-palette color c, stored as an exact
integer numerator over D = delta**10.  On arrival an edge either samples a
color from its weights (common path), is handled specially when an endpoint
has gone bad, or is marked and falls back to a greedy color from the separate
palette {delta+1, delta+2, ...}.  After a color commit, the weights of
unarrived neighbors are zeroed for the committed color and scaled up by
1/(1 - P_ec) for the others (skipping weights above the cap A), each scaled
value rounded back onto the grid.

Out of the paper-scale parameter regime a scaled weight can exceed 1; the
weights are then no longer probabilities, which is exactly the case the
"sum > 1" marking branch guards.  Weights are therefore allowed above 1 and
only non-negativity is enforced.

The chooser decides the sampling step: a seeded sampler (randomized runs) or
the potential-minimizing deterministic chooser.  Rounding directions for the
scale-ups belong to the chooser's outcome; the seeded sampler rounds up or
down at random preserving the expectation, with randomness keyed by
(seed, processing edge, target edge, color) so replays and lazy
reconstruction see identical draws.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from edgecolor.graph import Graph
from edgecolor.params import Params


class OnlineError(RuntimeError):
    pass


class _Bot:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BOT"


#: The "no color" sampling outcome.
BOT = _Bot()

# Branch names, also used in serialized decision records.
SAMPLE_PATH = "sample_path"
BAD_PATH_MARK = "bad_path_mark"
BAD_PATH_COLOR = "bad_path_color"
MARK_Z_GE_1 = "mark_z_ge_1"


def keyed_rng(seed, *key) -> random.Random:
    """Deterministic RNG keyed by (seed, *key); stable across processes."""
    digest = hashlib.sha256(repr((seed,) + key).encode()).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


@dataclass
class Outcome:
    """A resolved sampling step: a color index (0-based) or BOT, plus the
    grid-rounding direction per affected weight ((f, c) -> -1 down / +1 up)."""

    choice: object  # int color index or BOT
    roundings: dict = field(default_factory=dict)


@dataclass
class UpdateEntry:
    """One weight change at unarrived neighbor f, color index c.

    ``exact`` is the unrounded scale-up value (a Fraction numerator over D)
    and is filled also for capped entries, where the stored weight is left
    unchanged but the uncapped value still feeds the drift bookkeeping."""

    f: int
    c: int
    old_num: int
    new_num: int
    exact: Fraction | None
    capped: bool
    zeroed: bool
    direction: int
    note: str | None = None


@dataclass
class EdgeRecord:
    """Stored per-edge tuple: arrival time, colors, pre-arrival weights, the
    branch (assignment line), endpoint badness at arrival, and the rounding
    directions applied to the neighbors' weights."""

    edge: int
    t: int
    branch: str
    sampled: object  # color index, BOT, or None outside the sample branch
    color: int | None
    marked: bool
    p_before: tuple
    endpoint_bad: tuple
    roundings: dict

    def to_json(self) -> dict:
        return {
            "edge": self.edge,
            "t": self.t,
            "branch": self.branch,
            "color": self.color,
            "P_before": list(self.p_before),
            "marked": self.marked,
        }


class ColoringState:
    """Whole mutable state of the online algorithm; single-writer."""

    def __init__(self, graph: Graph, params: Params):
        self.graph = graph
        self.params = params
        d = params.delta
        self.p = [[params.initial_num] * d for _ in range(graph.m)]
        self.arrived = [False] * graph.m
        self.records: list[EdgeRecord | None] = [None] * graph.m
        self.udeg = [0] * graph.n
        self.baddeg = [0] * graph.n
        self.bad_since: dict[int, int] = {}
        self.final_color: list[int | None] = [None] * graph.m
        self.marked = [False] * graph.m
        self.t = 0
        self.warnings: list[str] = []
        self.gate = None  # set by the sequential-local executor

    # -- gated reads --------------------------------------------------------

    def _note(self, eid):
        if self.gate is not None:
            self.gate.note(eid)

    def _note_incident_arrived(self, v):
        if self.gate is not None:
            for eid in self.graph.incident(v):
                if self.arrived[eid]:
                    self.gate.note(eid)

    def read_p_row(self, e) -> list[int]:
        """Pre-arrival weights of e; provenance is e's arrived neighbors."""
        self._note(e)
        if self.gate is not None:
            for f in self.graph.edge_neighbors(e):
                if self.arrived[f]:
                    self.gate.note(f)
        return self.p[e]

    def is_bad(self, v) -> bool:
        self._note_incident_arrived(v)
        return self.udeg[v] >= self.params.bad_threshold

    def is_dangerous(self, v) -> bool:
        self._note_incident_arrived(v)
        return self.baddeg[v] >= self.params.danger_threshold

    def z_num(self, e) -> int:
        """Numerator of Z_e = sum_c P_ec over D."""
        return sum(self.read_p_row(e))

    def record_of(self, f) -> EdgeRecord | None:
        self._note(f)
        return self.records[f]

    def unarrived_neighbors(self, e):
        return [f for f in self.graph.edge_neighbors(e) if not self.arrived[f]]


def init_state(g: Graph, params: Params) -> ColoringState:
    """Fresh state: every weight (1-eps)/delta on the grid, clocks at zero."""
    if params.delta != max(g.max_degree, 1):
        raise OnlineError(
            f"params.delta={params.delta} does not match the graph's max degree {g.max_degree}"
        )
    return ColoringState(g, params)


def classify_arrival(state: ColoringState, e: int):
    """Route an arriving edge to its branch.

    Returns (branch, color_index_or_None).  The bad-path color is the
    lowest-index positive color (the pseudocode says "arbitrary"; fixed for
    determinism)."""
    if state.arrived[e]:
        raise OnlineError(f"edge {e} already processed")
    u, v = state.graph.endpoints(e)
    row = state.read_p_row(e)
    if state.is_bad(u) or state.is_bad(v):
        all_zero = not any(row)
        if all_zero or state.is_dangerous(u) or state.is_dangerous(v):
            return BAD_PATH_MARK, None
        c = next(i for i, num in enumerate(row) if num > 0)
        return BAD_PATH_COLOR, c
    if sum(row) > state.params.D:
        return MARK_Z_GE_1, None
    return SAMPLE_PATH, None


def sample_color(state: ColoringState, e: int, rng: random.Random):
    """Draw from (P_e1, ..., P_edelta, 1 - sum) exactly on the grid."""
    row = state.read_p_row(e)
    total = sum(row)
    if total > state.params.D:
        raise OnlineError(f"edge {e}: sum of weights exceeds 1; belongs to {MARK_Z_GE_1}")
    draw = rng.randrange(state.params.D)
    acc = 0
    for c, num in enumerate(row):
        acc += num
        if draw < acc:
            return c
    return BOT


def scale_division(num_f: int, num_e: int, D: int):
    """Exact P_f/(1 - P_e) on the grid: floor numerator and remainder over
    (D - num_e).  remainder == 0 means the result is already a grid point."""
    q, r = divmod(num_f * D, D - num_e)
    return q, r


def compute_update_plan(
    state: ColoringState,
    e: int,
    branch: str,
    choice,
    roundings: dict | None = None,
    rng_seed=None,
) -> list[UpdateEntry]:
    """Weight updates the arrival of e induces at its unarrived neighbors.

    Pure: reads state, mutates nothing.  Rounding directions come from
    ``roundings`` when given (deterministic chooser), else from the keyed
    sampler (``rng_seed``)."""
    plan: list[UpdateEntry] = []
    if branch in (BAD_PATH_MARK, MARK_Z_GE_1):
        return plan
    D = state.params.D
    cap = state.params.cap_num
    row_e = state.p[e]
    if state.gate is not None:
        state.gate.note(e)
    delta = state.params.delta
    for f in state.unarrived_neighbors(e):
        state._note(f)
        row_f = state.p[f]
        if branch == BAD_PATH_COLOR:
            c = choice
            if row_f[c] != 0:
                plan.append(UpdateEntry(f, c, row_f[c], 0, None, False, True, 0))
            continue
        for c in range(delta):
            old = row_f[c]
            if choice is not BOT and c == choice:
                if old != 0:
                    plan.append(UpdateEntry(f, c, old, 0, None, False, True, 0))
                continue
            ne = row_e[c]
            if ne == 0 or old == 0:
                continue
            if ne >= D:
                # P_ec = 1 cannot be scaled through; zero the target and log.
                # Unreachable when the sum is <= 1 with >= 2 live colors.
                plan.append(
                    UpdateEntry(f, c, old, 0, None, False, True, 0, note="clamped_division")
                )
                continue
            exact = Fraction(old, D - ne)  # unrounded scale-up value
            if old > cap:
                plan.append(UpdateEntry(f, c, old, old, exact, True, False, 0))
                continue
            q, r = scale_division(old, ne, D)
            if r == 0:
                plan.append(UpdateEntry(f, c, old, q, exact, False, False, 0))
                continue
            if roundings is not None:
                direction = roundings.get((f, c), -1)
            elif rng_seed is not None:
                rr = keyed_rng(rng_seed, "round", e, f, c)
                direction = 1 if rr.randrange(D - ne) < r else -1
            else:
                raise OnlineError("off-grid scale-up needs rounding directions or a seed")
            new = q + 1 if direction > 0 else q
            plan.append(UpdateEntry(f, c, old, new, exact, False, False, direction))
    return plan


def apply_updates(state: ColoringState, e: int, plan: list[UpdateEntry]) -> None:
    """Commit a plan.  Zeroed weights stay zero forever; values stay on grid."""
    for entry in plan:
        if entry.note:
            state.warnings.append(f"{entry.note} at edge {e} color {entry.c}")
        if entry.capped:
            continue
        if entry.new_num < 0:
            raise OnlineError("negative weight update")
        cur = state.p[entry.f][entry.c]
        if cur != entry.old_num:
            raise OnlineError("stale update plan")
        if cur == 0 and entry.new_num != 0:
            raise OnlineError("zeroed weight cannot come back")
        state.p[entry.f][entry.c] = entry.new_num


def greedy_fallback(state: ColoringState, e: int) -> int:
    """Smallest fallback color (> delta) unused by adjacent marked edges."""
    delta = state.params.delta
    used = set()
    for f in state.graph.edge_neighbors(e):
        if state.arrived[f]:
            state._note(f)
            c = state.final_color[f]
            if c is not None and c > delta:
                used.add(c)
    c = delta + 1
    while c in used:
        c += 1
    return c


class RandomizedChooser:
    """Sampler: color from the weights, grid roundings at random, all draws
    keyed by (seed, edge) so arrival order does not perturb unrelated draws."""

    name = "randomized"

    def __init__(self, seed):
        self.seed = seed

    def choose(self, state: ColoringState, e: int) -> Outcome:
        rng = keyed_rng(self.seed, "color", e)
        return Outcome(sample_color(state, e, rng), roundings=None)

    def plan_for(self, state, e, branch, outcome):
        return compute_update_plan(state, e, branch, outcome.choice, rng_seed=self.seed)


class FixedChooser:
    """Replays precomputed outcomes (used by the parallel schedule executor).
    Raises KeyError if consulted for an edge it has no outcome for, which
    would mean the schedule was not actually conflict-free."""

    name = "fixed"

    def __init__(self, outcomes: dict, rng_seed=None):
        self.outcomes = outcomes
        self.rng_seed = rng_seed

    def choose(self, state, e):
        return self.outcomes[e]

    def plan_for(self, state, e, branch, outcome):
        if outcome.roundings is not None:
            return compute_update_plan(state, e, branch, outcome.choice, roundings=outcome.roundings)
        return compute_update_plan(state, e, branch, outcome.choice, rng_seed=self.rng_seed)


def process_edge(state: ColoringState, e: int, chooser, pstate=None) -> EdgeRecord:
    """Run one arrival: classify, resolve a color (sampling or the chooser's
    deterministic pick), push the weight updates, maintain badness counters,
    and fall back to the greedy palette when marked.

    Badness increments happen only on the two sampling-branch marking lines,
    never on the bad-path marking line.  ``pstate``, when given, is advanced
    in lockstep and must be registered on this state's graph."""
    g = state.graph
    if state.arrived[e]:
        raise OnlineError(f"edge {e} already processed")
    u, v = g.endpoints(e)
    p_before = tuple(state.p[e])
    bad_u, bad_v = state.is_bad(u), state.is_bad(v)
    branch, bad_color = classify_arrival(state, e)

    sampled = None
    color = None
    marked = False
    plan: list[UpdateEntry] = []

    if branch == BAD_PATH_MARK:
        marked = True
    elif branch == BAD_PATH_COLOR:
        color = bad_color + 1
        plan = compute_update_plan(state, e, branch, bad_color)
    elif branch == MARK_Z_GE_1:
        marked = True
        state.udeg[u] += 1
        state.udeg[v] += 1
    else:
        outcome = chooser.choose(state, e)
        sampled = outcome.choice
        plan = chooser.plan_for(state, e, branch, outcome)
        if sampled is BOT:
            marked = True
            state.udeg[u] += 1
            state.udeg[v] += 1
        else:
            color = sampled + 1

    if pstate is not None:
        pstate.apply_arrival(state, e, branch, sampled if branch == SAMPLE_PATH else bad_color, plan, p_before, (bad_u, bad_v))

    apply_updates(state, e, plan)
    state.t += 1
    state.arrived[e] = True

    # Edges arriving at a currently-bad endpoint raise the other endpoint's
    # bad-neighbor count, at arrival time.
    if bad_u:
        state.baddeg[v] += 1
    if bad_v:
        state.baddeg[u] += 1
    for w in (u, v):
        if w not in state.bad_since and state.udeg[w] >= state.params.bad_threshold:
            state.bad_since[w] = state.t

    if marked:
        state.marked[e] = True
        color = greedy_fallback(state, e)

    state.final_color[e] = color
    roundings = {
        (entry.f, entry.c): entry.direction for entry in plan if entry.direction != 0
    }
    rec = EdgeRecord(
        edge=e,
        t=state.t,
        branch=branch,
        sampled=sampled if branch == SAMPLE_PATH else bad_color,
        color=color,
        marked=marked,
        p_before=p_before,
        endpoint_bad=(bad_u, bad_v),
        roundings=roundings,
    )
    state.records[e] = rec
    return rec


def records_to_jsonl(state: ColoringState, path) -> None:
    """Decision records as JSON lines; first line carries the schema."""
    with open(path, "w") as fh:
        header = {
            "schema": 1,
            "delta": state.params.delta,
            "grid_denominator": state.params.D,
            "eps": state.params.eps,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in state.records:
            if rec is not None:
                fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
