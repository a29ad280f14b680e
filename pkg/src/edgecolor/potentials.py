"""Martingale-controlling potentials and the deterministic color chooser.

The derandomization replaces every concentration bound in the randomized
analysis with a potential

    phi(X, t, lam, S, N) = exp((4*lam/(S^2*N)) * (X - (lam/2)*(1 + t/N)))

evaluated at X = Z(t) - Z(0) for a tracked supermartingale Z, where t counts
only Z's non-trivial steps.  Summing the per-martingale potentials gives a
global Phi that is non-increasing in expectation under the sampler, so some
deterministic choice never increases it; the chooser picks the outcome
(color or no-color, plus a rounding direction per scaled weight) minimizing
the change.

Tracked quantities, each anchored at a vertex w and supported within its
3-hop neighborhood:

  Q   per color set C: sum over edges f at w of P_fc discounted by the
      product of (1 - P_gc) over arrived edges g at w, values frozen at each
      edge's own arrival.  Controls "few bad colors".
  K   per (matching M, color set C): sum of P_ec over M x C.  Upper tail of
      the matching mass.
  -L  the centered version of K built from uncapped scale-ups; its lower
      tail certifies the matching mass from below.
  H   per neighbor set U: drift -c_K*eps plus the marked indicator on every
      arrival incident to U with both endpoints good and Z in the critical
      window.  Controls "few bad neighbors".
  X   per (C, U): steps -s*(1-eps/2)*|C|/delta + s*[colored from C] on good
      arrivals with small Z_C, s = |e cap U|.  Controls the bad-vertex
      property.

Arithmetic: martingale values are exact Fractions assembled from the grid
weights; phi itself is evaluated with 128-bit floats (gmpy2) and potential
deltas are compared with an absolute tie tolerance of 1e-30, which is all the
chooser needs: a consistent total order, not exact reals.

Subset families are enumerated exactly when their literal index sets are
affordable; set sizes prescribed as fractions of delta are floored with a
minimum of 1, and a prescribed size exceeding the ground set leaves the
family empty, matching the literal (empty) index set.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2

from edgecolor.graph import Graph, EdgeColoring, canonical_matchings
from edgecolor.online import (
    BOT,
    SAMPLE_PATH,
    BAD_PATH_COLOR,
    BAD_PATH_MARK,
    MARK_Z_GE_1,
    ColoringState,
    Outcome,
    UpdateEntry,
    compute_update_plan,
    scale_division,
)
from edgecolor.params import Params

gmpy2.get_context().precision = 128

_MPFR = gmpy2.mpfr
_EXP = gmpy2.exp

#: Absolute tolerance for treating two potential deltas as tied.
TIE_TOL = _MPFR("1e-30")

#: Relative slack for the breach check; covers the second-order gap between
#: the first-order rounding rule and the exact conditional expectation
#: (bounded by (coef * grid_step)^2 per affected weight, far below 1e-15).
BREACH_REL = _MPFR("1e-15")


class PotentialError(RuntimeError):
    pass


class EnumerationBudgetError(PotentialError):
    pass


class StepBudgetError(PotentialError):
    pass


class InfeasibleColorError(PotentialError):
    pass


class EstimatorBreachError(PotentialError):
    def __init__(self, message, dump):
        super().__init__(message)
        self.dump = dump


def _mp(x) -> "gmpy2.mpfr":
    if isinstance(x, Fraction):
        return _MPFR(gmpy2.mpq(x.numerator, x.denominator))
    return _MPFR(x)


def phi(X, t, lam, S, N):
    """Closed-form pessimistic-estimator value; 128-bit evaluation."""
    if lam <= 0 or S <= 0 or N <= 0:
        raise PotentialError("phi needs lam, S, N > 0")
    lam_, s_, n_ = _mp(lam), _mp(S), _mp(N)
    coef = 4 * lam_ / (s_ * s_ * n_)
    return _EXP(coef * (_mp(X) - lam_ / 2 * (1 + _mp(t) / n_)))


@dataclass
class PhiShape:
    """Fixed (lam, S, N) triple with precomputed mpfr pieces."""

    lam: Fraction
    S: Fraction
    N: Fraction

    def __post_init__(self):
        if self.lam <= 0 or self.S <= 0 or self.N <= 0:
            raise PotentialError("phi parameters must be positive")
        lam, s, n = _mp(self.lam), _mp(self.S), _mp(self.N)
        self.coef = 4 * lam / (s * s * n)
        self._off0 = self.coef * lam / 2
        self._offs = self.coef * lam / (2 * n)

    def log_phi(self, x_frac: Fraction, s: int):
        return self.coef * _mp(x_frac) - self._off0 - self._offs * s

    def phi(self, x_frac: Fraction, s: int):
        return _EXP(self.log_phi(x_frac, s))


FAMILY_Q = "few_bad_colors"
FAMILY_NEI = "few_bad_neighbors"
FAMILY_BVP = "bad_vertex_property"


class Martingale:
    """One tracked quantity: exact value offset X = Z - Z(0), non-trivial step
    counter s, phi shape, and a multiplicity for deduplicated index tuples."""

    __slots__ = (
        "kind",
        "key",
        "family",
        "shape",
        "mult",
        "X",
        "s",
        "step_cap",
        "initial",
        "cur_phi",
        "touched",
    )

    def __init__(self, kind, key, family, shape, step_cap, initial):
        self.kind = kind
        self.key = key
        self.family = family
        self.shape = shape
        self.mult = 0
        self.X = Fraction(0)
        self.s = 0
        self.step_cap = step_cap
        self.initial = initial
        self.cur_phi = shape.phi(Fraction(0), 0)
        self.touched = set()

    def phi_at(self, x: Fraction, s: int):
        return self.shape.phi(x, s)

    def describe(self):
        return {
            "kind": self.kind,
            "key": repr(self.key),
            "mult": self.mult,
            "X": float(self.X),
            "s": self.s,
            "lam": float(self.shape.lam),
            "S": float(self.shape.S),
            "N": float(self.shape.N),
            "phi": float(self.cur_phi),
        }


class _QAggregate:
    """Per-anchor running pieces of Q: for each color, the product over
    arrived incident edges of (1 - P at their arrival), the frozen
    contributions of arrived incident edges, and the live weight sum of
    unarrived incident edges (as a grid numerator)."""

    __slots__ = ("prod", "frozen", "live")

    def __init__(self, delta, initial_num, degree):
        self.prod = [Fraction(1)] * delta
        self.frozen = [Fraction(0)] * delta
        self.live = [initial_num * degree] * delta

    def value(self, c, D) -> Fraction:
        return self.frozen[c] + self.prod[c] * Fraction(self.live[c], D)


def _clamped_size(x: Fraction | float) -> int:
    """max(1, floor(x)): the desk-scale reading of fractional set sizes."""
    return max(1, math.floor(x))


@dataclass
class RestrictedFamily:
    """Cap each subset family at `max_sets` seeded samples.  Guarantees then
    cover only the registered index sets."""

    max_sets: int
    seed: int = 0


class PotentialState:
    """Registry of all tracked martingales plus the global potential."""

    def __init__(self, graph: Graph, params: Params, base_coloring: EdgeColoring, mode):
        self.graph = graph
        self.params = params
        self.base_coloring = base_coloring
        self.mode = mode
        self.aggs = {}
        self.pots: dict = {}
        self.q_by_wc: dict = {}
        self.k_by_edge: dict = {}
        self.h_by_vertex: dict = {}
        self.x_by_vertex: dict = {}
        self.phi_total = _MPFR(0)
        self.subtotals = {FAMILY_Q: _MPFR(0), FAMILY_NEI: _MPFR(0), FAMILY_BVP: _MPFR(0)}
        self.registered_tuples = 0
        self.trace = None  # optional list capturing (t, edge, outcome, phi before/after)
        self.read_hook = None  # installed by the sequential executor for locality audits

    # -- registration helpers ------------------------------------------------

    def _add(self, mart: Martingale):
        prev = self.pots.get((mart.kind, mart.key))
        if prev is None:
            self.pots[(mart.kind, mart.key)] = mart
            return mart
        return prev

    def _bump(self, mart: Martingale, family_weight=1):
        mart.mult += family_weight
        delta = mart.cur_phi * family_weight
        self.phi_total += delta
        self.subtotals[mart.family] += delta

    def all_martingales(self):
        return self.pots.values()

    def phi0_expected(self):
        """Sum of mult * exp(-2*lam^2/(S^2*N)) over the registry."""
        tot = _MPFR(0)
        for m in self.pots.values():
            lam, s, n = _mp(m.shape.lam), _mp(m.shape.S), _mp(m.shape.N)
            tot += m.mult * _EXP(-2 * lam * lam / (s * s * n))
        return tot

    # -- arrival processing ---------------------------------------------------

    def _q_anchor_deltas(self, cstate, e, plan, p_before):
        """Per-(w, c) exact value changes of the Q aggregates."""
        g = self.graph
        D = self.params.D
        u, v = g.endpoints(e)
        by_wc_live = {}
        for entry in plan:
            if entry.capped or entry.new_num == entry.old_num:
                continue
            a, b = g.edges[entry.f]
            d = entry.new_num - entry.old_num
            by_wc_live[(a, entry.c)] = by_wc_live.get((a, entry.c), 0) + d
            by_wc_live[(b, entry.c)] = by_wc_live.get((b, entry.c), 0) + d
        deltas = {}
        endpoint_cols = set()
        for c, pb in enumerate(p_before):
            if pb:
                endpoint_cols.add(c)
        for w in (u, v):
            agg = self.aggs.get(w)
            if agg is None:
                continue
            cols = set(endpoint_cols)
            cols.update(c for (ww, c) in by_wc_live if ww == w)
            for c in cols:
                pb = Fraction(p_before[c], D)
                old_val = agg.value(c, D)
                live_new = agg.live[c] - p_before[c] + by_wc_live.get((w, c), 0)
                prod_new = agg.prod[c] * (1 - pb)
                frozen_new = agg.frozen[c] + agg.prod[c] * pb
                new_val = frozen_new + prod_new * Fraction(live_new, D)
                if new_val != old_val:
                    deltas[(w, c)] = new_val - old_val
        for (w, c), dlive in by_wc_live.items():
            if w in (u, v):
                continue
            agg = self.aggs.get(w)
            if agg is None:
                continue
            d = agg.prod[c] * Fraction(dlive, D)
            if d:
                deltas[(w, c)] = d
        return deltas, by_wc_live

    def _collect_deltas(self, cstate, e, branch, choice, plan, p_before, endpoint_bad):
        """Pure: list of (martingale, dX, stepped) this arrival would cause."""
        g = self.graph
        params = self.params
        D = params.D
        u, v = g.endpoints(e)
        out = []

        qdeltas, _ = self._q_anchor_deltas(cstate, e, plan, p_before)
        per_pot: dict = {}
        for (w, c), dval in qdeltas.items():
            for mart in self.q_by_wc.get((w, c), ()):
                per_pot[mart] = per_pot.get(mart, Fraction(0)) + dval
        for mart, dx in per_pot.items():
            if dx:
                out.append((mart, dx, True))

        # K and -L, per deduplicated (matching, color set) key.
        good = not (endpoint_bad[0] or endpoint_bad[1])
        kl_touch: dict = {}
        plan_by_fc = {(en.f, en.c): en for en in plan}
        seen_edges = set()
        for en in plan:
            if en.f in seen_edges:
                continue
            seen_edges.add(en.f)
            for key in self.k_by_edge.get(en.f, ()):
                kl_touch.setdefault(key, set()).add(en.f)
        for key, members in kl_touch.items():
            mset, cset = key
            kmart = self.pots.get(("K", key))
            lmart = self.pots.get(("negL", key))
            dk = Fraction(0)
            dy = Fraction(0)
            for f in members:
                for c in cset:
                    en = plan_by_fc.get((f, c))
                    if en is None:
                        continue
                    if not en.capped:
                        dk += Fraction(en.new_num - en.old_num, D)
                    if good:
                        if en.zeroed:
                            dy += -Fraction(en.old_num, D)
                        elif en.capped:
                            dy += en.exact - Fraction(en.old_num, D)
                        else:
                            dy += Fraction(en.new_num - en.old_num, D)
            if kmart is not None and dk:
                out.append((kmart, dk, True))
            if lmart is not None and good and dy:
                out.append((lmart, -dy, True))

        # H: arrivals incident to U with both endpoints good and Z in window.
        z = Fraction(sum(p_before), D)
        if good and (1 - params.ck_eps) <= z <= 1:
            marked = branch == SAMPLE_PATH and choice is BOT
            dh = -params.ck_eps + (1 if marked else 0)
            seen = set()
            for w in (u, v):
                for ukey in self.h_by_vertex.get(w, ()):
                    if ukey in seen:
                        continue
                    seen.add(ukey)
                    mart = self.pots.get(("H", ukey))
                    if dh:
                        out.append((mart, dh, True))

        # X: good arrivals with Z_C below the per-key threshold.
        if good:
            seen = set()
            for w in (u, v):
                for key in self.x_by_vertex.get(w, ()):
                    if key in seen:
                        continue
                    seen.add(key)
                    cset, ukey = key
                    zc = Fraction(sum(p_before[c] for c in cset), D)
                    thresh = (1 - params.eps_frac / 2) * Fraction(len(cset), params.delta)
                    if zc > thresh:
                        continue
                    s_e = (1 if u in ukey else 0) + (1 if v in ukey else 0)
                    colored_from = (
                        branch == SAMPLE_PATH and choice is not BOT and choice in cset
                    )
                    dxv = -s_e * thresh + (s_e if colored_from else 0)
                    mart = self.pots.get(("X", key))
                    if dxv:
                        out.append((mart, dxv, True))

        if self.read_hook is not None:
            # provenance of each affected value: the arrivals that moved it
            for mart, _dx, _st in out:
                self.read_hook(mart.touched)
        return out

    def evaluate(self, cstate, e, branch, choice, plan, p_before, endpoint_bad, memo=None):
        """Exact Phi change this outcome would cause, without committing."""
        deltas = self._collect_deltas(cstate, e, branch, choice, plan, p_before, endpoint_bad)
        total = _MPFR(0)
        for mart, dx, stepped in deltas:
            s_new = mart.s + (1 if stepped else 0)
            if memo is not None:
                k = (id(mart), dx, s_new)
                val = memo.get(k)
                if val is None:
                    val = mart.phi_at(mart.X + dx, s_new)
                    memo[k] = val
            else:
                val = mart.phi_at(mart.X + dx, s_new)
            total += mart.mult * (val - mart.cur_phi)
        return total

    def affected_mass(self, cstate, e, branch, choice, plan, p_before, endpoint_bad):
        deltas = self._collect_deltas(cstate, e, branch, choice, plan, p_before, endpoint_bad)
        tot = _MPFR(0)
        for mart, _dx, _st in deltas:
            tot += mart.mult * mart.cur_phi
        return tot

    def apply_arrival(self, cstate, e, branch, choice, plan, p_before, endpoint_bad):
        """Commit an arrival: advance martingales, aggregates, and Phi."""
        deltas = self._collect_deltas(cstate, e, branch, choice, plan, p_before, endpoint_bad)
        phi_before = self.phi_total
        for mart, dx, stepped in deltas:
            if stepped:
                if mart.s + 1 > mart.step_cap:
                    raise StepBudgetError(
                        f"{mart.kind}{mart.key}: step counter would exceed N bound "
                        f"{mart.step_cap} (wrong N)"
                    )
                mart.s += 1
            mart.X += dx
            new_phi = mart.phi_at(mart.X, mart.s)
            d = mart.mult * (new_phi - mart.cur_phi)
            self.phi_total += d
            self.subtotals[mart.family] += d
            mart.cur_phi = new_phi
            mart.touched.add(e)

        # Aggregates after the martingale math (which reads the old ones).
        g = self.graph
        D = self.params.D
        u, v = g.endpoints(e)
        for w in (u, v):
            agg = self.aggs.get(w)
            if agg is None:
                continue
            for c, pb in enumerate(p_before):
                if pb:
                    pbf = Fraction(pb, D)
                    agg.frozen[c] += agg.prod[c] * pbf
                    agg.prod[c] *= 1 - pbf
                agg.live[c] -= pb
        for entry in plan:
            if entry.capped or entry.new_num == entry.old_num:
                continue
            a, b = g.edges[entry.f]
            d = entry.new_num - entry.old_num
            for w in (a, b):
                agg = self.aggs.get(w)
                if agg is not None:
                    agg.live[entry.c] += d
        if self.trace is not None:
            self.trace.append(
                {
                    "t": cstate.t + 1,
                    "edge": e,
                    "branch": branch,
                    "choice": repr(choice),
                    "phi_before": float(phi_before),
                    "phi_after": float(self.phi_total),
                    "few_bad_colors": float(self.subtotals[FAMILY_Q]),
                    "few_bad_neighbors": float(self.subtotals[FAMILY_NEI]),
                    "bad_vertex_property": float(self.subtotals[FAMILY_BVP]),
                }
            )


# ---------------------------------------------------------------------------
# Registration
# ---------------------------------------------------------------------------


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.count = 0

    def spend(self, k=1):
        self.count += k
        if self.count > self.limit:
            raise EnumerationBudgetError(
                f"exact enumeration needs more than the configured budget of "
                f"{self.limit} registered index tuples"
            )


def _family(universe, size, budget: _Budget, restricted: RestrictedFamily | None, seed_key):
    """The literal index set {S subseteq universe : |S| = size}, possibly
    truncated in restricted mode.  Empty when size exceeds the ground set.
    The family's cardinality is charged to the budget before materializing."""
    universe = sorted(universe)
    if size > len(universe):
        return []
    total = math.comb(len(universe), size)
    if restricted is None or total <= restricted.max_sets:
        budget.spend(total)
        return [frozenset(c) for c in itertools.combinations(universe, size)]
    budget.spend(restricted.max_sets)
    rng = random.Random(repr((restricted.seed, seed_key)))
    picked = set()
    while len(picked) < restricted.max_sets:
        picked.add(frozenset(rng.sample(universe, size)))
    return sorted(picked, key=sorted)


def register_potentials(
    g: Graph,
    base_coloring: EdgeColoring,
    params: Params,
    mode: str = "exact",
    budget: int = 10**6,
    restricted: RestrictedFamily | None = None,
) -> PotentialState:
    """Instantiate every potential of the three families at its initial value.

    Exact mode enumerates the literal subset families; the total number of
    index tuples is charged against ``budget`` and registration aborts naming
    the budget when it would be exceeded.  Restricted mode truncates each
    family to a seeded sample; guarantees then apply only to the registered
    family."""
    from edgecolor.graph import verify_edge_coloring

    rep = verify_edge_coloring(g, base_coloring)
    if not rep.proper:
        raise PotentialError(f"base coloring conflicts on {rep.conflicting_pair}")
    if base_coloring.max_color() > 2 * max(g.max_degree, 1):
        raise PotentialError("base coloring must use <= 2*Delta colors")
    if mode == "restricted" and restricted is None:
        restricted = RestrictedFamily(max_sets=64, seed=0)
    if mode == "exact":
        restricted = None

    ps = PotentialState(g, params, base_coloring, mode)
    d = params.delta
    eps = params.eps_frac
    alpha = params.alpha_frac
    A = params.A
    palette = list(range(d))
    full_c = frozenset(palette)
    bud = _Budget(budget)
    shapes: dict = {}

    def _shape(lam, S, N):
        key = (lam, S, N)
        sh = shapes.get(key)
        if sh is None:
            sh = PhiShape(lam=lam, S=S, N=N)
            shapes[key] = sh
        return sh

    for w in range(g.n):
        if g.degree(w) > 0:
            ps.aggs[w] = _QAggregate(d, params.initial_num, g.degree(w))

    # --- few bad colors: Q over color subsets of size eps^5 * delta ---------
    s_qc = _clamped_size(eps**5 * d)
    shape_q = _shape(eps**6 * d / 2, 24 * A, Fraction(d * d))
    for w in range(g.n):
        if g.degree(w) == 0:
            continue
        for cset in _family(palette, s_qc, bud, restricted, ("Q", w)):
            init = sum((ps.aggs[w].value(c, params.D) for c in cset), Fraction(0))
            mart = ps._add(
                Martingale("Q", (w, cset), FAMILY_Q, shape_q, step_cap=d * d, initial=init)
            )
            ps._bump(mart)
            for c in cset:
                ps.q_by_wc.setdefault((w, c), []).append(mart)

    def _register_kl(mset, cset, family):
        bud.spend()
        mm, cc = len(mset), len(cset)
        shape = _shape(eps * mm * cc / (2 * d), 24 * A, Fraction(2 * mm * d))
        key = (mset, cset)
        kmart = ps.pots.get(("K", key))
        if kmart is None:
            init = Fraction(params.initial_num * mm * cc, params.D)
            kmart = ps._add(
                Martingale("K", key, family, shape, step_cap=2 * mm * d, initial=init)
            )
            lmart = ps._add(
                Martingale("negL", key, family, shape, step_cap=2 * mm * d, initial=Fraction(0))
            )
            for gid in mset:
                ps.k_by_edge.setdefault(gid, []).append(key)
        else:
            lmart = ps.pots[("negL", key)]
        ps._bump(kmart)
        ps._bump(lmart)

    # --- few bad neighbors: H_U plus matching potentials over G[U] ----------
    s_u = _clamped_size(alpha * d)
    s_m = _clamped_size(eps * alpha * d)
    for w in range(g.n):
        nbrs = sorted({g.other_end(eid, w) for eid in g.incident(w)})
        for uset in _family(nbrs, s_u, bud, restricted, ("U", w)):
            n_h = max(alpha * d * d, Fraction(len(uset) * d))
            shape_h = _shape(eps * n_h, Fraction(1), n_h)
            hmart = ps._add(
                Martingale(
                    "H", uset, FAMILY_NEI, shape_h, step_cap=len(uset) * d, initial=Fraction(0)
                )
            )
            ps._bump(hmart)
            for x in uset:
                lst = ps.h_by_vertex.setdefault(x, [])
                if uset not in lst:
                    lst.append(uset)
            part = canonical_matchings(g, base_coloring, w, uset, _checked=True)
            for mi in part.matchings:
                for msub in _family(mi, s_m, bud, restricted, ("M", w, uset)):
                    _register_kl(msub, full_c, FAMILY_NEI)

    # --- bad vertex property: X_{C,U} plus matching potentials --------------
    s_cb = _clamped_size(2 * params.c_K_frac * eps * d)
    s_ub = _clamped_size(eps * d)
    s_mb = _clamped_size(eps**3 * d)
    if s_cb <= d:
        for w in range(g.n):
            nbrs = sorted({g.other_end(eid, w) for eid in g.incident(w)})
            if s_ub > len(nbrs):
                continue
            csets = _family(palette, s_cb, bud, restricted, ("CB", w))
            usets = _family(nbrs, s_ub, bud, restricted, ("UB", w))
            for uset in usets:
                n_x = max(eps * d * d, Fraction(len(uset) * d))
                lam_x = 2 * eps**2 * d * len(uset) * (1 - eps / 2)
                shape_x = _shape(lam_x, Fraction(2), n_x)
                part = canonical_matchings(g, base_coloring, w, uset, _checked=True)
                for cset in csets:
                    bud.spend()
                    key = (cset, uset)
                    xmart = ps._add(
                        Martingale(
                            "X", key, FAMILY_BVP, shape_x,
                            step_cap=len(uset) * d, initial=Fraction(0),
                        )
                    )
                    ps._bump(xmart)
                    for x in uset:
                        lst = ps.x_by_vertex.setdefault(x, [])
                        if key not in lst:
                            lst.append(key)
                    for mi in part.matchings:
                        for msub in _family(mi, s_mb, bud, restricted, ("MB", w, uset, cset)):
                            _register_kl(msub, cset, FAMILY_BVP)

    ps.registered_tuples = bud.count
    return ps


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def _context_for(cstate: ColoringState, e: int):
    from edgecolor.online import classify_arrival

    u, v = cstate.graph.endpoints(e)
    p_before = tuple(cstate.p[e])
    endpoint_bad = (cstate.is_bad(u), cstate.is_bad(v))
    branch, bad_color = classify_arrival(cstate, e)
    return branch, bad_color, p_before, endpoint_bad


def potential_delta(pstate: PotentialState, cstate: ColoringState, e: int, outcome: Outcome):
    """Exact Phi change if e were processed with this outcome (color or BOT
    plus rounding directions); touches only potentials anchored within two
    hops of e and reads only edges within five."""
    branch, bad_color, p_before, endpoint_bad = _context_for(cstate, e)
    choice = outcome.choice
    if branch == SAMPLE_PATH and choice is not BOT:
        if p_before[choice] == 0:
            raise InfeasibleColorError(f"color {choice + 1} has zero weight at edge {e}")
    plan = compute_update_plan(
        cstate, e, branch, choice if branch == SAMPLE_PATH else bad_color,
        roundings=outcome.roundings or {},
    )
    return pstate.evaluate(cstate, e, branch, choice, plan, p_before, endpoint_bad)


def _rounding_directions(pstate, cstate, e, p_before, good):
    """First-order rule: for each off-grid scale-up, pick the direction whose
    linearized Phi effect is smaller.  The derivative of Phi in a single
    weight is sum over affected potentials of mult*phi*coef*weight, with
    weight = the product term for Q at the two endpoints of f, +1 for K, and
    -1 for -L (when the arrival is good).  Candidate-independent by design;
    second-order error is within the breach slack."""
    g = pstate.graph
    D = pstate.params.D
    cap = pstate.params.cap_num
    dirs = {}
    row_e = cstate.p[e]
    for f in cstate.unarrived_neighbors(e):
        a, b = g.edges[f]
        row_f = cstate.p[f]
        for c in range(pstate.params.delta):
            ne = row_e[c]
            old = row_f[c]
            if ne == 0 or old == 0 or ne >= D or old > cap:
                continue
            _q, r = scale_division(old, ne, D)
            if r == 0:
                continue
            slope = _MPFR(0)
            for w in (a, b):
                agg = pstate.aggs.get(w)
                if agg is None:
                    continue
                for mart in pstate.q_by_wc.get((w, c), ()):
                    slope += mart.mult * mart.cur_phi * mart.shape.coef * _mp(agg.prod[c])
            for key in pstate.k_by_edge.get(f, ()):
                if c in key[1]:
                    kmart = pstate.pots[("K", key)]
                    slope += kmart.mult * kmart.cur_phi * kmart.shape.coef
                    if good:
                        lmart = pstate.pots[("negL", key)]
                        slope -= lmart.mult * lmart.cur_phi * lmart.shape.coef
            dirs[(f, c)] = -1 if slope > 0 else 1
    return dirs


def choose_color_argmin(pstate: PotentialState, cstate: ColoringState, e: int) -> Outcome:
    """Deterministic replacement for the sampling step: the feasible outcome
    (lowest color index first, then BOT) minimizing the exact Phi change.

    Raises EstimatorBreachError when every outcome strictly increases Phi
    beyond the documented slack; the theory forbids this, so it signals an
    implementation bug."""
    branch, _bad_color, p_before, endpoint_bad = _context_for(cstate, e)
    if branch != SAMPLE_PATH:
        raise PotentialError(f"chooser invoked on branch {branch}")
    good = not (endpoint_bad[0] or endpoint_bad[1])
    dirs = _rounding_directions(pstate, cstate, e, p_before, good)
    candidates = [c for c, num in enumerate(p_before) if num > 0]
    if sum(p_before) < pstate.params.D:
        candidates.append(BOT)
    if not candidates:
        raise PotentialError(f"edge {e} has no feasible outcome; should have been marked")

    memo: dict = {}
    best = None
    best_delta = None
    best_plan = None
    deltas = []
    for choice in candidates:
        plan = compute_update_plan(cstate, e, branch, choice, roundings=dirs)
        d = pstate.evaluate(cstate, e, branch, choice, plan, p_before, endpoint_bad, memo=memo)
        deltas.append((choice, d))
        if best_delta is None or d < best_delta - TIE_TOL:
            best = choice
            best_delta = d
            best_plan = plan

    mass = pstate.affected_mass(cstate, e, branch, best, best_plan, p_before, endpoint_bad)
    tol = BREACH_REL * mass + TIE_TOL
    if best_delta > tol:
        raise EstimatorBreachError(
            f"estimator breach at edge {e}: every outcome increases Phi "
            f"(best {float(best_delta):.3e} > tol {float(tol):.3e})",
            dump={
                "edge": e,
                "t": cstate.t,
                "p_before": list(p_before),
                "candidates": [(repr(c), float(d)) for c, d in deltas],
                "phi_total": float(pstate.phi_total),
                "affected": [
                    m.describe()
                    for m, _dx, _s in pstate._collect_deltas(
                        cstate, e, branch, best, best_plan, p_before, endpoint_bad
                    )
                ],
            },
        )
    return Outcome(best, roundings=dirs)


def update_potentials(pstate: PotentialState, cstate: ColoringState, e: int, outcome: Outcome):
    """Advance every affected martingale one step for this arrival; called at
    the commit point, before the weight updates land in the coloring state."""
    if cstate.arrived[e]:
        raise PotentialError("update_potentials must run at commit time, before arrival lands")
    branch, bad_color, p_before, endpoint_bad = _context_for(cstate, e)
    choice = outcome.choice if branch == SAMPLE_PATH else bad_color
    plan = compute_update_plan(
        cstate, e, branch, choice, roundings=outcome.roundings or {}
    )
    pstate.apply_arrival(cstate, e, branch, outcome.choice if branch == SAMPLE_PATH else bad_color,
                         plan, p_before, endpoint_bad)


class DeterministicChooser:
    """Argmin chooser bound to a potential registry."""

    name = "deterministic"

    def __init__(self, pstate: PotentialState):
        self.pstate = pstate

    def choose(self, state, e):
        return choose_color_argmin(self.pstate, state, e)

    def plan_for(self, state, e, branch, outcome):
        return compute_update_plan(state, e, branch, outcome.choice, roundings=outcome.roundings)


@dataclass
class InvariantReport:
    phi: float
    small_potential: bool
    few_bad_colors: bool
    max_over_cap: int
    few_bad_neighbors: bool
    max_baddeg: int
    bad_vertex_property: bool
    worst_bvp_count: int

    def all_hold(self):
        return (
            self.small_potential
            and self.few_bad_colors
            and self.few_bad_neighbors
            and self.bad_vertex_property
        )


def check_invariants(pstate: PotentialState, cstate: ColoringState) -> InvariantReport:
    """Evaluate invariants (i)-(iv) directly from the coloring state."""
    params = cstate.params
    cap = params.cap_num
    limit_colors = 2 * params.eps_frac**5 * params.delta
    max_over = 0
    for eid in range(cstate.graph.m):
        row = cstate.records[eid].p_before if cstate.arrived[eid] else cstate.p[eid]
        max_over = max(max_over, sum(1 for num in row if num > cap))
    few_bad_colors = Fraction(max_over) <= limit_colors

    max_baddeg = max(cstate.baddeg, default=0)
    few_bad_neighbors = Fraction(max_baddeg) <= params.danger_threshold

    worst = 0
    for v, t0 in cstate.bad_since.items():
        cnt = 0
        for eid in cstate.graph.incident(v):
            rec = cstate.records[eid]
            if rec is not None and rec.t > t0 and sum(rec.p_before) == 0:
                cnt += 1
        worst = max(worst, cnt)
    bvp = Fraction(worst) <= params.eps_frac * params.delta

    phi_val = float(pstate.phi_total)
    return InvariantReport(
        phi=phi_val,
        small_potential=phi_val < 1.0,
        few_bad_colors=few_bad_colors,
        max_over_cap=max_over,
        few_bad_neighbors=few_bad_neighbors,
        max_baddeg=max_baddeg,
        bad_vertex_property=bvp,
        worst_bvp_count=worst,
    )


def trace_to_csv(pstate: PotentialState, path):
    """Potential trace as CSV (see the trace hook on PotentialState)."""
    if pstate.trace is None:
        raise PotentialError("tracing was not enabled")
    cols = [
        "t",
        "edge",
        "branch",
        "choice",
        "phi_before",
        "phi_after",
        "few_bad_colors",
        "few_bad_neighbors",
        "bad_vertex_property",
    ]
    with open(path, "w") as fh:
        fh.write("# edgecolor-potential-trace schema=1\n")
        fh.write(",".join(cols) + "\n")
        for row in pstate.trace:
            fh.write(",".join(_csv_cell(row[c]) for c in cols) + "\n")


def _csv_cell(x):
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)
