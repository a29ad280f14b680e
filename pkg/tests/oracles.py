"""Independent recomputation oracles.

Everything here computes from the written definitions (weight evolution
formulas, the R/Q products, matching sums, drift sums) over the decision
history, with its own replay code, so it shares no state-maintenance path
with the incremental engine it checks.
"""

from fractions import Fraction

from edgecolor.online import BOT, BAD_PATH_COLOR, BAD_PATH_MARK, MARK_Z_GE_1, SAMPLE_PATH


def replay_weights(g, params, records):
    """Weight snapshots per time step, recomputed from the decision records.

    Returns (timeline, arrived_at) where timeline[t][e][c] is the grid
    numerator after t arrivals and arrived_at maps edge -> arrival time."""
    D = params.D
    d = params.delta
    cap = params.cap_num
    snap = [[params.initial_num] * d for _ in range(g.m)]
    timeline = [[row[:] for row in snap]]
    arrived_at = {}
    ordered = sorted((r for r in records if r is not None), key=lambda r: r.t)
    for rec in ordered:
        e = rec.edge
        assert tuple(snap[e]) == tuple(rec.p_before), "stored pre-arrival weights diverge"
        arrived_at[e] = rec.t
        new = [row[:] for row in snap]
        if rec.branch == BAD_PATH_COLOR:
            for f in g.edge_neighbors(e):
                if f not in arrived_at:
                    new[f][rec.sampled] = 0
        elif rec.branch == SAMPLE_PATH:
            k = rec.sampled
            for f in g.edge_neighbors(e):
                if f in arrived_at:
                    continue
                for c in range(d):
                    if k is not BOT and c == k:
                        new[f][c] = 0
                        continue
                    ne = rec.p_before[c]
                    old = snap[f][c]
                    if ne == 0 or old == 0:
                        continue
                    if ne >= D:
                        new[f][c] = 0
                        continue
                    if old > cap:
                        continue
                    q, r = divmod(old * D, D - ne)
                    if r == 0:
                        new[f][c] = q
                    else:
                        new[f][c] = q + 1 if rec.roundings.get((f, c), -1) > 0 else q
        snap = new
        timeline.append([row[:] for row in snap])
    return timeline, arrived_at


def udeg_timeline(g, params, records):
    """udeg(v) after t arrivals; increments only on the two sampling-branch
    marking lines."""
    T = sum(1 for r in records if r is not None)
    series = [[0] * g.n]
    cur = [0] * g.n
    ordered = sorted((r for r in records if r is not None), key=lambda r: r.t)
    for rec in ordered:
        cur = cur[:]
        if rec.branch == MARK_Z_GE_1 or (rec.branch == SAMPLE_PATH and rec.sampled is BOT):
            u, v = g.edges[rec.edge]
            cur[u] += 1
            cur[v] += 1
        series.append(cur)
    assert len(series) == T + 1
    return series


def _is_bad(params, udeg_row, v):
    return Fraction(udeg_row[v]) >= params.bad_threshold


def q_value(g, params, timeline, arrived_at, w, cset, t):
    """Q from the definition: frozen R's for arrived incident edges, live
    discounted weights for the rest."""
    D = params.D
    total = Fraction(0)
    incident = g.incident(w)
    for f in incident:
        tf = arrived_at.get(f)
        tt = t if tf is None else min(t, tf - 1)
        for c in cset:
            p = Fraction(timeline[tt][f][c], D)
            prod = Fraction(1)
            for gg in incident:
                tg = arrived_at.get(gg)
                if tg is not None and tg <= tt:
                    prod *= 1 - Fraction(timeline[tg - 1][gg][c], D)
            total += p * prod
    return total


def k_value(g, params, timeline, arrived_at, mset, cset, t):
    D = params.D
    total = Fraction(0)
    for gg in mset:
        tg = arrived_at.get(gg)
        tt = t if tg is None else min(t, tg - 1)
        for c in cset:
            total += Fraction(timeline[tt][gg][c], D)
    return total


def negl_value(g, params, records, timeline, arrived_at, udeg, mset, cset, t):
    """-L = -sum of Y drift terms over the matching, from the definition of
    the uncapped scale-ups."""
    D = params.D
    cap = params.cap_num
    ordered = sorted((r for r in records if r is not None), key=lambda r: r.t)
    total = Fraction(0)
    for gg in mset:
        tg = arrived_at.get(gg, None)
        nbrs = set(g.edge_neighbors(gg))
        for rec in ordered:
            tp = rec.t
            if tp > t or (tg is not None and tp >= tg):
                continue
            if rec.edge not in nbrs:
                continue
            u, v = g.edges[rec.edge]
            if _is_bad(params, udeg[tp - 1], u) or _is_bad(params, udeg[tp - 1], v):
                continue
            for c in cset:
                before = Fraction(timeline[tp - 1][gg][c], D)
                after = Fraction(timeline[tp][gg][c], D)
                capped_skip = (
                    rec.branch == SAMPLE_PATH
                    and (rec.sampled is BOT or c != rec.sampled)
                    and timeline[tp - 1][gg][c] > cap
                    and rec.p_before[c] > 0
                )
                if capped_skip:
                    pbar = before / (1 - Fraction(rec.p_before[c], D))
                else:
                    pbar = after
                total += pbar - before
    return -total


def h_value(g, params, records, udeg, uset, t):
    D = params.D
    total = Fraction(0)
    for rec in sorted((r for r in records if r is not None), key=lambda r: r.t):
        if rec.t > t:
            break
        u, v = g.edges[rec.edge]
        if not (u in uset or v in uset):
            continue
        if _is_bad(params, udeg[rec.t - 1], u) or _is_bad(params, udeg[rec.t - 1], v):
            continue
        z = Fraction(sum(rec.p_before), D)
        if not ((1 - params.ck_eps) <= z <= 1):
            continue
        marked = rec.branch == SAMPLE_PATH and rec.sampled is BOT
        total += -params.ck_eps + (1 if marked else 0)
    return total


def x_value(g, params, records, udeg, cset, uset, t):
    D = params.D
    d = params.delta
    total = Fraction(0)
    thresh = (1 - params.eps_frac / 2) * Fraction(len(cset), d)
    for rec in sorted((r for r in records if r is not None), key=lambda r: r.t):
        if rec.t > t:
            break
        u, v = g.edges[rec.edge]
        s_e = (1 if u in uset else 0) + (1 if v in uset else 0)
        if s_e == 0:
            continue
        if _is_bad(params, udeg[rec.t - 1], u) or _is_bad(params, udeg[rec.t - 1], v):
            continue
        zc = Fraction(sum(rec.p_before[c] for c in cset), D)
        if zc > thresh:
            continue
        colored_from = (
            rec.branch == SAMPLE_PATH and rec.sampled is not BOT and rec.sampled in cset
        )
        total += -s_e * thresh + (s_e if colored_from else 0)
    return total


def martingale_series(g, params, records, timeline, arrived_at, udeg, kind, key, T):
    """Value at every t = 0..T; the step counter is the number of changes."""
    if kind == "Q":
        w, cset = key
        vals = [q_value(g, params, timeline, arrived_at, w, cset, t) for t in range(T + 1)]
    elif kind == "K":
        mset, cset = key
        vals = [k_value(g, params, timeline, arrived_at, mset, cset, t) for t in range(T + 1)]
    elif kind == "negL":
        mset, cset = key
        vals = [
            negl_value(g, params, records, timeline, arrived_at, udeg, mset, cset, t)
            for t in range(T + 1)
        ]
    elif kind == "H":
        vals = [h_value(g, params, records, udeg, key, t) for t in range(T + 1)]
    elif kind == "X":
        cset, uset = key
        vals = [x_value(g, params, records, udeg, cset, uset, t) for t in range(T + 1)]
    else:
        raise ValueError(kind)
    steps = sum(1 for t in range(1, T + 1) if vals[t] != vals[t - 1])
    return vals, steps


def phi_from_scratch(pstate, cstate):
    """Recompute every registered martingale's (X, s) from definitions and
    sum the potentials; returns (phi_total, mismatches)."""
    import gmpy2

    g = cstate.graph
    params = cstate.params
    records = cstate.records
    T = sum(1 for r in records if r is not None)
    timeline, arrived_at = replay_weights(g, params, records)
    udeg = udeg_timeline(g, params, records)
    total = gmpy2.mpfr(0)
    mismatches = []
    for (kind, key), mart in pstate.pots.items():
        vals, steps = martingale_series(
            g, params, records, timeline, arrived_at, udeg, kind, key, T
        )
        x = vals[T] - vals[0]
        if x != mart.X or steps != mart.s:
            mismatches.append((kind, key, float(x), float(mart.X), steps, mart.s))
        total += mart.mult * mart.shape.phi(x, steps)
    return total, mismatches
