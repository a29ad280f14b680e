"""Benchmark result emission: delimited output plus rendered figures.

CSV columns are fixed and versioned in the header comment; rows carry no
wall-clock data, so a config and code revision determine every output byte.
Figures are rendered next to the CSV on the same report path.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

BENCH_COLUMNS = [
    "kind",
    "n",
    "m",
    "delta",
    "eps",
    "seed",
    "algorithm",
    "order",
    "proper",
    "colors_used",
    "main_colors",
    "fallback_colors",
    "max_fallback_degree",
    "max_marked_degree",
    "marked_fraction_mean",
    "phi0",
    "phi_final",
    "phi_max",
    "locality_max",
    "rounds_physical",
    "max_congestion_bits",
    "in_regime",
]

CSV_HEADER = "# edgecolor-bench schema=1 columns=" + ";".join(BENCH_COLUMNS)


def format_cell(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_bench_csv(rows, path):
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        fh.write(",".join(BENCH_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(row.get(c)) for c in BENCH_COLUMNS) + "\n")


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata={"Software": "edgecolor"})
    plt.close(fig)


def render_bench_figures(rows, out_dir):
    """Figures alongside the CSV: colors vs delta, marked fractions, and the
    congestion profile of bandwidth-limited runs.  Returns written paths."""
    written = []
    by_alg = {}
    for row in rows:
        by_alg.setdefault(row["algorithm"], []).append(row)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for alg, rs in sorted(by_alg.items()):
        ax.scatter(
            [r["delta"] for r in rs],
            [r["colors_used"] for r in rs],
            label=alg,
            s=22,
            alpha=0.75,
        )
    deltas = sorted({r["delta"] for r in rows})
    if deltas:
        ax.plot(deltas, [2 * d - 1 for d in deltas], "k--", lw=1, label="2*delta-1")
    ax.set_xlabel("max degree")
    ax.set_ylabel("colors used")
    ax.legend(fontsize=8)
    ax.set_title("palette size by algorithm")
    path = os.path.join(out_dir, "colors_vs_delta.png")
    _save(fig, path)
    written.append(path)

    fracs = [r["marked_fraction_mean"] for r in rows if r.get("marked_fraction_mean") is not None]
    if fracs:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        ax.hist(fracs, bins=20, color="#4477aa")
        ax.set_xlabel("mean marked fraction per vertex")
        ax.set_ylabel("runs")
        ax.set_title("greedy-fallback pressure")
        path = os.path.join(out_dir, "marked_fraction.png")
        _save(fig, path)
        written.append(path)

    cong = [
        (i, r["max_congestion_bits"])
        for i, r in enumerate(rows)
        if r.get("max_congestion_bits")
    ]
    if cong:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        ax.bar([c[0] for c in cong], [c[1] for c in cong], color="#cc6677")
        ax.set_xlabel("run index")
        ax.set_ylabel("max channel bits per step")
        ax.set_title("bandwidth-limited congestion")
        path = os.path.join(out_dir, "congestion.png")
        _save(fig, path)
        written.append(path)
    return written


def render_phi_trace(trace_rows, path):
    """Potential trajectory figure for one deterministic run."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ts = [r["t"] for r in trace_rows]
    ax.plot(ts, [r["phi_after"] for r in trace_rows], lw=1.2, label="Phi")
    ax.plot(ts, [r["few_bad_colors"] for r in trace_rows], lw=0.9, label="few bad colors")
    ax.plot(ts, [r["few_bad_neighbors"] for r in trace_rows], lw=0.9, label="few bad neighbors")
    ax.plot(ts, [r["bad_vertex_property"] for r in trace_rows], lw=0.9, label="bad vertex prop")
    ax.set_xlabel("arrival")
    ax.set_ylabel("potential")
    ax.legend(fontsize=8)
    ax.set_title("potential trajectory")
    _save(fig, path)
    return path
