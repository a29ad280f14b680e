"""Command-line driver: instance generation, algorithm runs, schedules,
degree splitting, coloring verification, benchmark sweeps, and access-log
audits.  Every run output is verified before a successful exit, and a config
plus seed determines every output byte."""

from __future__ import annotations

import argparse
import json
import os
import sys

from edgecolor.graph import (
    EdgeColoring,
    generate,
    graph_from_json,
    graph_to_json,
    verify_edge_coloring,
)
from edgecolor.online import records_to_jsonl
from edgecolor.potentials import trace_to_csv
from edgecolor.slocal import access_log_to_jsonl, access_log_from_jsonl, audit_locality, run_slocal
from edgecolor.scheduling import (
    Schedule,
    build_schedule,
    execute_schedule,
    nd_decompose,
    validate_decomposition,
    validate_schedule,
)
from edgecolor.distsim import congest_pipeline, degree_split, split_to_max_degree
from edgecolor import report


def _out_dir(args):
    d = getattr(args, "out_dir", None) or os.environ.get("EDGECOLOR_OUTDIR", ".")
    os.makedirs(d, exist_ok=True)
    return d


def _load_graph(path):
    with open(path) as fh:
        return graph_from_json(fh.read())


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def coloring_to_json(col: EdgeColoring) -> str:
    return json.dumps(
        {
            "schema": 1,
            "delta": col.delta,
            "assignment": {str(k): v for k, v in sorted(col.assignment.items())},
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def coloring_from_json(text) -> EdgeColoring:
    doc = json.loads(text)
    return EdgeColoring({int(k): v for k, v in doc["assignment"].items()}, doc["delta"])


def cmd_generate(args):
    params = {}
    for key in ("n", "delta", "reps", "a", "b"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    g = generate(args.kind, params, seed=args.seed)
    _write(args.out, graph_to_json(g))
    print(f"wrote {args.out}: n={g.n} m={g.m} delta={g.max_degree}")
    return 0


def cmd_run(args):
    g = _load_graph(args.instance)
    out_dir = _out_dir(args)
    if args.algorithm == "congest-pipeline":
        res = congest_pipeline(
            g,
            args.eps,
            seed=args.seed,
            bandwidth_bits=args.bandwidth_bits,
            round_cap=args.round_cap,
        )
        col = res.coloring
        if args.trace_csv:
            res.trace.to_csv(args.trace_csv)
        print(
            f"pipeline: parts={res.parts} small_delta={res.small_delta_branch} "
            f"physical_rounds={res.trace.physical_rounds} max_step_bits={res.max_step_bits()}"
        )
    else:
        res = run_slocal(
            g,
            args.order,
            args.algorithm,
            ell=args.ell,
            eps=args.eps,
            seed=args.seed,
            trace=bool(args.trace_csv),
        )
        col = res.coloring
        audit = audit_locality(res.access_log)
        print(f"locality: max radius {audit.max_radius}, histogram {audit.histogram}")
        if args.records:
            records_to_jsonl(res.state, args.records)
        if args.access_log:
            access_log_to_jsonl(res.access_log, args.access_log)
        if args.trace_csv and res.pstate is not None:
            trace_to_csv(res.pstate, args.trace_csv)
            if args.figures:
                path = os.path.join(out_dir, "phi_trace.png")
                report.render_phi_trace(res.pstate.trace, path)
                print(f"wrote {path}")
    rep = verify_edge_coloring(g, col)
    if not rep.proper:
        print(f"IMPROPER coloring: conflicting pair {rep.conflicting_pair}", file=sys.stderr)
        return 1
    _write(args.out, coloring_to_json(col))
    print(
        f"wrote {args.out}: proper, colors_used={rep.colors_used} "
        f"max_fallback_degree={rep.max_fallback_degree}"
    )
    return 0


def cmd_schedule(args):
    g = _load_graph(args.instance)
    if args.builder == "nd":
        decomp = nd_decompose(g, args.ell, seed=args.seed)
        validate_decomposition(g, decomp)
        doc = {
            "schema": 1,
            "builder": "nd",
            "ell": args.ell,
            "c": decomp.c,
            "d": decomp.d,
            "classes": decomp.classes,
        }
        _write(args.out, json.dumps(doc, sort_keys=True, separators=(",", ":")))
        print(f"wrote {args.out}: c={decomp.c} d={decomp.d}")
        return 0
    sched = build_schedule(g, args.builder, ell=args.ell)
    validate_schedule(g, sched)
    _write(args.out, sched.to_json())
    print(f"wrote {args.out}: {len(sched.classes)} classes")
    return 0


def cmd_split(args):
    g = _load_graph(args.instance)
    if args.target_degree is not None:
        res = split_to_max_degree(g, args.target_degree, args.eps)
        doc = {
            "schema": 1,
            "levels": res.levels,
            "eta": res.eta,
            "deltas_per_level": res.deltas_per_level,
            "sum_subgraph_deltas": res.sum_subgraph_deltas,
            "subgraphs": [s.meta["parent_edge_ids"] for s in res.subgraphs],
        }
        _write(args.out, json.dumps(doc, sort_keys=True, separators=(",", ":")))
        print(f"wrote {args.out}: {len(res.subgraphs)} subgraphs, levels={res.levels}")
        return 0
    sp = degree_split(g, args.eta)
    doc = {
        "schema": 1,
        "eta": sp.eta,
        "q": sp.q,
        "max_discrepancy": sp.max_discrepancy(),
        "gamma": sp.gamma,
        "recursion_depth": sp.recursion_depth,
        "max_path_len": sp.max_path_len,
    }
    _write(args.out, json.dumps(doc, sort_keys=True, separators=(",", ":")))
    print(f"wrote {args.out}: max discrepancy {sp.max_discrepancy()}, gamma {sp.gamma}")
    return 0


def cmd_verify(args):
    g = _load_graph(args.instance)
    with open(args.coloring) as fh:
        col = coloring_from_json(fh.read())
    rep = verify_edge_coloring(g, col)
    if not rep.proper:
        print(f"IMPROPER: conflicting pair {rep.conflicting_pair}", file=sys.stderr)
        return 1
    print(
        f"proper: colors_used={rep.colors_used} max_fallback_degree={rep.max_fallback_degree}"
    )
    return 0


def _bench_row(g, meta, algorithm, eps, seed, order):
    row = {
        "kind": meta.get("kind", "?"),
        "n": g.n,
        "m": g.m,
        "delta": g.max_degree,
        "eps": eps,
        "seed": seed,
        "algorithm": algorithm,
        "order": order,
    }
    if algorithm == "congest-pipeline":
        res = congest_pipeline(g, eps, seed=seed)
        rep = verify_edge_coloring(g, res.coloring)
        row.update(
            proper=rep.proper,
            colors_used=rep.colors_used,
            main_colors=None,
            fallback_colors=None,
            max_fallback_degree=None,
            max_marked_degree=None,
            marked_fraction_mean=None,
            phi0=None,
            phi_final=None,
            phi_max=None,
            locality_max=None,
            rounds_physical=res.trace.physical_rounds,
            max_congestion_bits=res.max_step_bits(),
            in_regime=None,
        )
        return row
    res = run_slocal(g, order, algorithm, eps=eps, seed=seed, trace=(algorithm == "deterministic"))
    rep = verify_edge_coloring(g, res.coloring)
    st = res.state
    delta = st.params.delta
    marked_deg = [0] * g.n
    for e in range(g.m):
        if st.marked[e]:
            u, v = g.edges[e]
            marked_deg[u] += 1
            marked_deg[v] += 1
    fracs = [marked_deg[v] / g.degree(v) for v in range(g.n) if g.degree(v) > 0]
    main = len({c for c in res.coloring.assignment.values() if c <= delta})
    fallback = len({c for c in res.coloring.assignment.values() if c > delta})
    audit = audit_locality(res.access_log)
    phi0 = phi_final = phi_max = None
    if res.pstate is not None and res.pstate.trace:
        phi0 = res.pstate.trace[0]["phi_before"]
        phi_final = res.pstate.trace[-1]["phi_after"]
        phi_max = max(r["phi_after"] for r in res.pstate.trace)
    row.update(
        proper=rep.proper,
        colors_used=rep.colors_used,
        main_colors=main,
        fallback_colors=fallback,
        max_fallback_degree=rep.max_fallback_degree,
        max_marked_degree=max(marked_deg, default=0),
        marked_fraction_mean=(sum(fracs) / len(fracs)) if fracs else 0.0,
        phi0=phi0,
        phi_final=phi_final,
        phi_max=phi_max,
        locality_max=audit.max_radius,
        rounds_physical=None,
        max_congestion_bits=None,
        in_regime=st.params.regime_ok(g.n),
    )
    return row


def cmd_bench(args):
    with open(args.config) as fh:
        config = json.load(fh)
    out_dir = _out_dir(args)
    rows = []
    order = config.get("arrival_order", "id")
    for inst in config["instances"]:
        g = generate(inst["kind"], inst.get("params", {}), seed=inst.get("seed", 0))
        for algorithm in config.get("algorithms", ["randomized"]):
            for eps in config.get("eps", [0.3]):
                for seed in config.get("seeds", [0]):
                    rows.append(_bench_row(g, g.meta, algorithm, eps, seed, order))
    csv_path = os.path.join(out_dir, "bench.csv")
    report.write_bench_csv(rows, csv_path)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    if config.get("figures", True):
        for path in report.render_bench_figures(rows, out_dir):
            print(f"wrote {path}")
    bad = [r for r in rows if not r.get("proper", True)]
    return 1 if bad else 0


def cmd_audit(args):
    log = access_log_from_jsonl(args.log)
    audit = audit_locality(log)
    print(f"max radius: {audit.max_radius}")
    print(f"histogram: {audit.histogram}")
    if args.ell is not None and audit.max_radius > args.ell:
        print(f"VIOLATION: reads beyond radius {args.ell}", file=sys.stderr)
        return 1
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="edgecolor")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an instance JSON")
    g.add_argument("--kind", required=True,
                   choices=["path", "cycle", "star_lb", "random_max_deg", "complete_bipartite"])
    g.add_argument("--n", type=int)
    g.add_argument("--delta", type=int)
    g.add_argument("--reps", type=int)
    g.add_argument("--a", type=int)
    g.add_argument("--b", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="execute an algorithm and write the coloring")
    r.add_argument("--instance", required=True)
    r.add_argument("--algorithm", required=True,
                   choices=["randomized", "deterministic", "congest-pipeline"])
    r.add_argument("--eps", type=float, default=0.3)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--ell", type=int, default=None)
    r.add_argument("--order", default="id")
    r.add_argument("--out", required=True)
    r.add_argument("--records")
    r.add_argument("--access-log", dest="access_log")
    r.add_argument("--trace-csv", dest="trace_csv")
    r.add_argument("--figures", action="store_true")
    r.add_argument("--mode", choices=["local", "congest"], default="congest")
    r.add_argument("--bandwidth-bits", dest="bandwidth_bits", type=int, default=None)
    r.add_argument("--round-cap", dest="round_cap", type=int, default=100000)
    r.add_argument("--out-dir", dest="out_dir")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("schedule", help="build and validate a schedule")
    s.add_argument("--instance", required=True)
    s.add_argument("--builder", choices=["conflict", "distance-l", "nd"], default="conflict")
    s.add_argument("--ell", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("split", help="degree splitting")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--eta", type=float, default=0.25)
    sp.add_argument("--target-degree", dest="target_degree", type=int)
    sp.add_argument("--eps", type=float, default=0.3)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split)

    v = sub.add_parser("verify", help="check a coloring")
    v.add_argument("--instance", required=True)
    v.add_argument("--coloring", required=True)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="sweep experiments; CSV plus figures")
    b.add_argument("--config", required=True)
    b.add_argument("--out-dir", dest="out_dir")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("audit", help="replay an access log")
    a.add_argument("--log", required=True)
    a.add_argument("--ell", type=int, default=None)
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as ex:  # invariant breach or malformed input: nonzero exit
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
