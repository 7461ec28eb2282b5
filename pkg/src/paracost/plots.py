"""Static figure rendering for report CSV rows.

One vector-graphics (SVG) file per metric; grouped bars, layers on the
x axis, one bar per architecture or sweep point.  Figures are derived
solely from the rows that go into the CSV.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

RUN_METRICS = ("latency_ns", "energy_pj", "utilization")
SWEEP_METRICS = ("latency_ns", "energy_pj", "utilization",
                 "rel_latency", "rel_energy", "rel_throughput")

_COLORS = ("#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4")


def _grouped_bars(rows, metric, group_key, out_path, title, log=False):
    layers = []
    for r in rows:
        if r["name"] not in layers:
            layers.append(r["name"])
    groups = []
    for r in rows:
        if r[group_key] not in groups:
            groups.append(r[group_key])

    width = 0.8 / max(len(groups), 1)
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(layers) + 2), 3.2))
    for gi, g in enumerate(groups):
        xs, ys = [], []
        for li, name in enumerate(layers):
            for r in rows:
                if r["name"] == name and r[group_key] == g:
                    xs.append(li + gi * width)
                    ys.append(r[metric])
                    break
        ax.bar(xs, ys, width=width, label=str(g),
               color=_COLORS[gi % len(_COLORS)], edgecolor="none")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(layers))])
    ax.set_xticklabels(layers, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel(metric)
    ax.set_title(title, fontsize=9)
    if log:
        ax.set_yscale("log")
    ax.legend(fontsize=7, ncol=min(len(groups), 5))
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)


def render_run(rows, out_dir, prefix, group_key="arch"):
    """One figure per metric; returns the written paths."""
    paths = []
    for metric in RUN_METRICS:
        path = out_dir / f"{prefix}_{metric}.svg"
        log = metric in ("latency_ns", "energy_pj")
        _grouped_bars(rows, metric, group_key, path, f"{prefix}: {metric}", log=log)
        paths.append(path)
    return paths


def render_sweep(rows, out_dir, prefix):
    paths = []
    for metric in SWEEP_METRICS:
        path = out_dir / f"{prefix}_{metric}.svg"
        log = metric in ("latency_ns", "energy_pj")
        _grouped_bars(rows, metric, "point", path, f"{prefix}: {metric}", log=log)
        paths.append(path)
    return paths
