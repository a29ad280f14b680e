import math
from fractions import Fraction

import pytest

from edgecolor.graph import EdgeColoring, generate, verify_edge_coloring
from edgecolor.online import (
    BAD_PATH_COLOR,
    BAD_PATH_MARK,
    BOT,
    MARK_Z_GE_1,
    SAMPLE_PATH,
    OnlineError,
    RandomizedChooser,
    apply_updates,
    classify_arrival,
    compute_update_plan,
    greedy_fallback,
    init_state,
    keyed_rng,
    process_edge,
    sample_color,
)
from edgecolor.params import ParamError, Params


def fresh(kind="random_max_deg", params=None, seed=1, eps=0.3, **overrides):
    g = generate(kind, params or {"n": 10, "delta": 4}, seed=seed)
    p = Params(max(g.max_degree, 1), eps, **overrides)
    return g, p, init_state(g, p)


def run_all(g, state, chooser):
    for e in range(g.m):
        process_edge(state, e, chooser)
    return EdgeColoring({e: state.final_color[e] for e in range(g.m)}, state.params.delta)


def test_init_state_values():
    g, p, st = fresh(eps=0.2)
    assert p.delta == 4
    # every weight is the grid rounding of (1-eps)/delta = 0.2
    expected = p.initial_num
    assert abs(expected / p.D - 0.2) <= 1 / p.D
    assert all(num == expected for row in st.p for num in row)
    # sum over colors = 1 - eps up to grid rounding
    total = sum(st.p[0])
    assert abs(total / p.D - 0.8) <= p.delta / p.D
    assert st.t == 0 and not any(st.udeg)


def test_init_state_eps_domain():
    with pytest.raises(ParamError):
        Params(4, 0.0)
    with pytest.raises(ParamError):
        Params(4, 1.0)


def test_init_state_delta_mismatch():
    g = generate("path", {"n": 5})
    with pytest.raises(OnlineError):
        init_state(g, Params(7, 0.3))


def test_classify_fresh_edge_samples():
    g, p, st = fresh()
    branch, _ = classify_arrival(st, 0)
    assert branch == SAMPLE_PATH


def test_classify_bad_paths():
    # c_K = 0 makes the bad threshold 0, so every vertex is bad from the start
    g, p, st = fresh(c_K=0.0)
    u, v = g.edges[0]
    st.p[0] = [0] * p.delta
    branch, _ = classify_arrival(st, 0)
    assert branch == BAD_PATH_MARK  # all weights zero
    st.p[1] = [0, 3, 0, 5]
    branch, c = classify_arrival(st, 1)
    assert branch == BAD_PATH_COLOR and c == 1  # lowest positive color
    # a dangerous endpoint forces the marking branch even with live colors
    u2, v2 = g.edges[2]
    st.baddeg[u2] = 10**9
    branch, _ = classify_arrival(st, 2)
    assert branch == BAD_PATH_MARK


def test_classify_mark_z_ge_1():
    g, p, st = fresh()
    st.p[0] = [p.D, 1, 0, 0]  # sum strictly above 1
    branch, _ = classify_arrival(st, 0)
    assert branch == MARK_Z_GE_1


def test_sample_color_degenerate():
    g, p, st = fresh()
    st.p[0] = [0, 0, 0, p.D]  # all mass on the last color
    rng = keyed_rng(0, "x")
    assert all(sample_color(st, 0, rng) == 3 for _ in range(20))


def test_sample_color_rejects_oversum():
    g, p, st = fresh()
    st.p[0] = [p.D, p.D, 0, 0]
    with pytest.raises(OnlineError):
        sample_color(st, 0, keyed_rng(0))


def test_sample_color_bot_rate():
    # fresh state: Pr[no color] = eps, empirically within 3 sigma
    g, p, st = fresh(eps=0.3)
    rng = keyed_rng(7, "rate")
    trials = 10**5
    bots = sum(1 for _ in range(trials) if sample_color(st, 0, rng) is BOT)
    p_bot = 1 - sum(st.p[0]) / p.D
    sigma = math.sqrt(p_bot * (1 - p_bot) * trials)
    assert abs(bots - p_bot * trials) <= 3 * sigma
    assert abs(p_bot - 0.3) < 1e-4


def test_sample_color_deterministic_per_seed():
    g, p, st = fresh()
    a = sample_color(st, 0, keyed_rng(5, "color", 0))
    b = sample_color(st, 0, keyed_rng(5, "color", 0))
    assert a == b


def test_scale_up_hand_value():
    # P_ec' = 0.1, P_fc' = 0.2 -> 0.2/0.9 on the grid (A is far above 0.25)
    g, p, st = fresh(kind="complete_bipartite", params={"a": 1, "b": 4}, eps=0.3)
    d = p.delta
    ne = round(0.1 * p.D)
    old = round(0.2 * p.D)
    st.p[0] = [ne] * d
    st.p[1] = [old] * d
    plan = [e for e in compute_update_plan(st, 0, SAMPLE_PATH, BOT, rng_seed=0) if e.f == 1]
    assert len(plan) == d
    for entry in plan:
        assert not entry.capped and not entry.zeroed
        q = old * p.D // (p.D - ne)
        assert entry.new_num in (q, q + 1)
        assert abs(entry.new_num / p.D - 0.2 / 0.9) < 1e-4
        assert entry.exact == Fraction(old, p.D - ne)


def test_scale_up_cap_guard():
    # a weight one grid step above A is left unchanged
    g, p, st = fresh(eps=0.9, c_A=1.0)  # small A = c_A/(eps^2*delta)
    assert p.cap_num < p.D
    st.p[1][0] = p.cap_num + 1
    st.p[1][1] = p.cap_num
    plan = compute_update_plan(st, 0, SAMPLE_PATH, BOT, rng_seed=0)
    by_fc = {(e.f, e.c): e for e in plan}
    assert by_fc[(1, 0)].capped and by_fc[(1, 0)].new_num == p.cap_num + 1
    assert not by_fc[(1, 1)].capped


def test_bot_outcome_only_scales():
    g, p, st = fresh()
    plan = compute_update_plan(st, 0, SAMPLE_PATH, BOT, rng_seed=0)
    assert plan and not any(e.zeroed for e in plan)


def test_color_outcome_zeroes_chosen_column():
    g, p, st = fresh()
    plan = compute_update_plan(st, 0, SAMPLE_PATH, 2, rng_seed=0)
    zeroed = {(e.f, e.c) for e in plan if e.zeroed}
    assert zeroed == {(f, 2) for f in st.unarrived_neighbors(0)}


def test_bad_path_color_only_zeroes_one_column():
    g, p, st = fresh(c_K=0.0)
    plan = compute_update_plan(st, 0, BAD_PATH_COLOR, 1)
    assert plan and all(e.zeroed and e.c == 1 for e in plan)


def test_zero_permanence_and_stale_plan():
    g, p, st = fresh()
    plan = compute_update_plan(st, 0, SAMPLE_PATH, 1, rng_seed=0)
    apply_updates(st, 0, plan)
    with pytest.raises(OnlineError):
        apply_updates(st, 0, plan)  # stale now


def test_greedy_fallback_rules():
    g, p, st = fresh(kind="complete_bipartite", params={"a": 1, "b": 4})
    assert greedy_fallback(st, 0) == p.delta + 1
    st.arrived[1] = True
    st.final_color[1] = p.delta + 1
    st.arrived[2] = True
    st.final_color[2] = p.delta + 2
    assert greedy_fallback(st, 0) == p.delta + 3


def test_process_edge_path_properness():
    g, p, st = fresh(kind="path", params={"n": 3})
    ch = RandomizedChooser(3)
    process_edge(st, 0, ch)
    process_edge(st, 1, ch)
    assert st.final_color[0] != st.final_color[1]
    with pytest.raises(OnlineError):
        process_edge(st, 0, ch)


def test_bad_path_mark_does_not_increment_badness():
    g, p, st = fresh(c_K=0.0)
    st.p[0] = [0] * p.delta
    u, v = g.edges[0]
    before = (st.udeg[u], st.udeg[v])
    rec = process_edge(st, 0, RandomizedChooser(0))
    assert rec.branch == BAD_PATH_MARK and rec.marked
    assert (st.udeg[u], st.udeg[v]) == before


def test_mark_z_increments_badness():
    g, p, st = fresh()
    st.p[0] = [p.D, 1, 0, 0]
    u, v = g.edges[0]
    rec = process_edge(st, 0, RandomizedChooser(0))
    assert rec.branch == MARK_Z_GE_1
    assert st.udeg[u] == 1 and st.udeg[v] == 1
    assert rec.color > p.delta  # greedy fallback


def test_full_run_proper_and_verified():
    for seed in range(5):
        g, p, st = fresh(params={"n": 16, "delta": 6}, seed=seed)
        col = run_all(g, st, RandomizedChooser(seed))
        rep = verify_edge_coloring(g, col)
        assert rep.proper
        # main palette never exceeds delta
        assert all(c <= p.delta or st.marked[e] for e, c in col.assignment.items())


def test_marginal_preservation_single_step():
    # R = P_fc * (1 - P_ec) moves by at most 2 grid steps per update
    g, p, st = fresh(params={"n": 12, "delta": 4}, seed=8)
    ch = RandomizedChooser(11)
    for e in range(6):
        row_before = {f: list(st.p[f]) for f in st.unarrived_neighbors(e)}
        pe = list(st.p[e])
        rec = process_edge(st, e, ch)
        if rec.branch != SAMPLE_PATH:
            continue
        k = rec.sampled
        for f, row in row_before.items():
            for c in range(p.delta):
                if k is not BOT and c == k:
                    continue
                if row[c] == 0 or row[c] > p.cap_num or pe[c] >= p.D:
                    continue
                r_before = Fraction(row[c], p.D)
                r_after = Fraction(st.p[f][c], p.D) * (1 - Fraction(pe[c], p.D))
                assert abs(r_after - r_before) <= Fraction(2, p.D)


def test_grid_invariant_and_nonnegative():
    g, p, st = fresh(params={"n": 14, "delta": 5}, seed=2)
    run_all(g, st, RandomizedChooser(4))
    for rec in st.records:
        assert all(isinstance(x, int) and x >= 0 for x in rec.p_before)


def test_regime_report():
    p = Params(16, 0.3)
    rep = p.regime_report(1000)
    assert rep["in_regime"] == (0.3 >= rep["eps_required"])
    assert not Params(4, 0.3).regime_ok(10**6)
