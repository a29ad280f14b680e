"""Fixed seeded instance corpora shared across the tests.

The main suite covers paths, cycles, stars, the adversarial star construction,
and random bounded-degree graphs for every max degree in 3..16, all with
n <= 5000.  Smaller dedicated corpora serve the derandomization checks
(small degree, exact enumeration affordable) and the conflict-graph oracle
(at most 30 edges).
"""

from functools import lru_cache

from edgecolor.graph import generate


def _spec_list():
    specs = []
    path_sizes = [
        2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20,
        23, 26, 29, 32, 36, 40, 45, 50, 60, 70, 80, 90, 100, 115, 130, 145,
        233, 377, 610, 987, 1597, 2584, 4181,
    ]
    for n in path_sizes:
        specs.append(("path", {"n": n}, 0, "id"))
    cycle_sizes = [
        3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 18, 20, 22, 25, 28,
        31, 35, 40, 46, 52, 60, 70, 82, 96, 112, 144, 232, 376, 608, 986,
        1596, 2584, 4181,
    ]
    for n in cycle_sizes:
        specs.append(("cycle", {"n": n}, 0, "id"))
    for k in range(3, 17):
        specs.append(("complete_bipartite", {"a": 1, "b": k}, 0, "id"))
    for delta, reps in [(3, 1), (4, 1), (5, 1), (3, 2)]:
        specs.append(("star_lb", {"delta": delta, "reps": reps}, 0, "adversarial"))
    for delta in range(3, 10):
        for n in (delta + 4, 2 * delta + 6, 5 * delta):
            for seed in (1, 2):
                specs.append(("random_max_deg", {"n": n, "delta": delta}, seed, "id"))
    for delta in (3, 4, 5):
        for n in (4 * delta + 2, 6 * delta):
            for seed in (3, 4):
                specs.append(("random_max_deg", {"n": n, "delta": delta}, seed, "id"))
    for n in (12, 20, 32, 52, 84, 130, 210, 340):
        for seed in (5, 6):
            specs.append(("random_max_deg", {"n": n, "delta": 3}, seed, "id"))
    for n in (24, 48, 96, 180):
        for seed in (7, 8):
            specs.append(("random_max_deg", {"n": n, "delta": 4}, seed, "id"))
    for delta in range(10, 17):
        for seed in (1, 2):
            specs.append(("random_max_deg", {"n": 2 * delta + 2, "delta": delta}, seed, "id"))
    for delta in (10, 12, 14, 16):
        specs.append(("random_max_deg", {"n": 3 * delta, "delta": delta}, 1, "id"))
    for a, b in [(2, 3), (3, 3), (3, 4), (4, 4), (5, 5), (6, 6), (8, 8)]:
        specs.append(("complete_bipartite", {"a": a, "b": b}, 0, "id"))
    return specs


@lru_cache(maxsize=None)
def criterion1_suite():
    """(name, graph, order) triples; >= 200 instances, n <= 5000."""
    out = []
    for kind, params, seed, order in _spec_list():
        g = generate(kind, params, seed=seed)
        name = f"{kind}({','.join(f'{k}={v}' for k, v in sorted(params.items()))},seed={seed})"
        out.append((name, g, order))
    return out


@lru_cache(maxsize=None)
def derand_corpus():
    """Small instances with delta <= 6 for the exact-enumeration contracts."""
    specs = [
        ("path", {"n": 7}, 0),
        ("path", {"n": 12}, 0),
        ("cycle", {"n": 8}, 0),
        ("cycle", {"n": 13}, 0),
        ("complete_bipartite", {"a": 1, "b": 5}, 0),
        ("complete_bipartite", {"a": 2, "b": 3}, 0),
        ("complete_bipartite", {"a": 3, "b": 3}, 0),
        ("star_lb", {"delta": 3}, 0),
        ("random_max_deg", {"n": 8, "delta": 3}, 1),
        ("random_max_deg", {"n": 9, "delta": 3}, 2),
        ("random_max_deg", {"n": 10, "delta": 4}, 1),
        ("random_max_deg", {"n": 10, "delta": 4}, 3),
        ("random_max_deg", {"n": 11, "delta": 5}, 1),
        ("random_max_deg", {"n": 12, "delta": 5}, 2),
        ("random_max_deg", {"n": 12, "delta": 6}, 1),
        ("random_max_deg", {"n": 13, "delta": 6}, 2),
    ]
    out = []
    for kind, params, seed in specs:
        g = generate(kind, params, seed=seed)
        out.append((f"{kind}{params}s{seed}", g))
    return out


@lru_cache(maxsize=None)
def conflict_corpus():
    """Graphs with at most 30 edges for the O(m^2) conflict oracle."""
    specs = [
        ("path", {"n": 9}, 0),
        ("path", {"n": 20}, 0),
        ("cycle", {"n": 11}, 0),
        ("cycle", {"n": 24}, 0),
        ("complete_bipartite", {"a": 1, "b": 7}, 0),
        ("complete_bipartite", {"a": 3, "b": 4}, 0),
        ("complete_bipartite", {"a": 4, "b": 5}, 0),
        ("star_lb", {"delta": 3}, 0),
        ("star_lb", {"delta": 4}, 0),
    ]
    for seed in range(1, 8):
        specs.append(("random_max_deg", {"n": 10, "delta": 4}, seed))
        specs.append(("random_max_deg", {"n": 12, "delta": 5}, seed))
        specs.append(("random_max_deg", {"n": 14, "delta": 4}, seed))
    out = []
    for kind, params, seed in specs:
        g = generate(kind, params, seed=seed)
        if g.m <= 30:
            out.append((f"{kind}{params}s{seed}", g))
    return out
