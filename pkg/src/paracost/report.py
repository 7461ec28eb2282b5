"""Row assembly and CSV emission for the command-line reports.

All numeric cells are formatted with a fixed precision rule so reruns on
equal inputs are byte-identical.
"""

from __future__ import annotations

import concurrent.futures
import math

from .arch import ArchSpec, scale, split_buffer
from .cost import CostResult
from .mapper import optimize
from .mapping import Mapping, MapspaceLimits, encode_mapping
from .workload import LayerShape

RUN_COLUMNS = ("index", "name", "arch", "latency_ns", "energy_pj", "utilization",
               "bottleneck", "energy_llm", "energy_buffer", "energy_network",
               "energy_mac", "mapping_encoding")

COMPARE_COLUMNS = RUN_COLUMNS + ("rel_latency", "rel_energy")

SWEEP_COLUMNS = ("kind", "point", "index", "name", "arch", "latency_ns", "energy_pj",
                 "utilization", "bottleneck", "throughput_lps", "max_macs_used",
                 "rel_latency", "rel_energy", "rel_throughput")

SWEEP_KINDS = ("batch", "llm_bw", "buffer_size", "buffer_layout", "max_mac")

#: sweep grids
BATCH_POINTS = (1, 2, 4, 8)
LLM_BW_POINTS = (1, 2, 4)
BUFFER_SIZE_POINTS = (1, 2, 4)
BUFFER_LAYOUT_POINTS = ((2, 1), (1, 1), (1, 2))
MAX_MAC_TARGET = 100_000


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(row[c]) for c in columns) + "\n")


def buffer_component(result: CostResult) -> float:
    return sum(v for k, v in result.breakdown.items()
               if k.startswith("buffer:") or k == "register")


def _base_cells(index: int, layer: LayerShape, arch_name: str,
                mapping: Mapping, result: CostResult) -> dict:
    return {
        "index": index,
        "name": layer.name,
        "arch": arch_name,
        "latency_ns": result.latency_ns,
        "energy_pj": result.energy_pj,
        "utilization": result.utilization,
        "bottleneck": result.bottleneck,
        "energy_llm": result.breakdown.get("llm", 0.0),
        "energy_buffer": buffer_component(result),
        "energy_network": result.breakdown.get("network", 0.0),
        "energy_mac": result.breakdown.get("mac", 0.0),
        "mapping_encoding": encode_mapping(mapping).replace(",", ";"),
    }


def _optimize_one(args):
    layer, arch, limits = args
    return optimize(layer, arch, limits)


def optimize_many(jobs, tasks):
    """Evaluate (layer, arch, limits) tasks, preserving input order."""
    if jobs <= 1:
        return [_optimize_one(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_optimize_one, tasks))


def run_rows(layers: list[LayerShape], arch: ArchSpec, limits: MapspaceLimits,
             jobs: int = 1) -> list[dict]:
    results = optimize_many(jobs, [(l, arch, limits) for l in layers])
    return [_base_cells(i, layer, arch.name, m, r)
            for i, (layer, (m, r)) in enumerate(zip(layers, results))]


def compare_rows(layers: list[LayerShape], archs: list[ArchSpec],
                 limits: MapspaceLimits, jobs: int = 1) -> list[dict]:
    tasks = [(l, a, limits) for l in layers for a in archs]
    results = optimize_many(jobs, tasks)
    rows = []
    it = iter(results)
    per_layer = [[next(it) for _ in archs] for _ in layers]
    for i, layer in enumerate(layers):
        best_lat = min(r.latency_ns for _, r in per_layer[i])
        best_en = min(r.energy_pj for _, r in per_layer[i])
        for a, (m, r) in zip(archs, per_layer[i]):
            row = _base_cells(i, layer, a.name, m, r)
            row["rel_latency"] = r.latency_ns / best_lat
            row["rel_energy"] = r.energy_pj / best_en
            rows.append(row)
    return rows


def _sweep_arches(kind: str, arch: ArchSpec):
    """(point label, transformed arch, batch factor) triples for a sweep."""
    if kind == "batch":
        return [(str(k), arch, k) for k in BATCH_POINTS]
    if kind == "llm_bw":
        return [(f"{f}x", scale(arch, "llm_bandwidth", f), 1) for f in LLM_BW_POINTS]
    if kind == "buffer_size":
        return [(f"{f}x", scale(arch, "working_memory", f), 1) for f in BUFFER_SIZE_POINTS]
    if kind == "buffer_layout":
        return [(f"{g}:{l}", split_buffer(arch, g, l), 1) for g, l in BUFFER_LAYOUT_POINTS]
    if kind == "max_mac":
        factor = MAX_MAC_TARGET / arch.total_macs
        return [("base", arch, 1), (str(MAX_MAC_TARGET), scale(arch, "mac_count", factor), 1)]
    raise ValueError(f"unknown sweep kind {kind!r}; expected one of {SWEEP_KINDS}")


def sweep_rows(kind: str, layers: list[LayerShape], arch: ArchSpec,
               limits: MapspaceLimits, jobs: int = 1) -> list[dict]:
    points = _sweep_arches(kind, arch)
    tasks = []
    for label, a, k in points:
        for layer in layers:
            tasks.append((layer.batched(k) if k > 1 else layer, a, limits))
    results = optimize_many(jobs, tasks)

    rows = []
    base: dict[int, tuple[float, float, float]] = {}
    ri = 0
    for label, a, k in points:
        for i, layer in enumerate(layers):
            m, r = results[ri]
            ri += 1
            throughput = k * 1e9 / r.latency_ns
            row = _base_cells(i, layer, arch.name, m, r)
            row.update({
                "kind": kind,
                "point": label,
                "throughput_lps": throughput,
                "max_macs_used": r.active_macs,
            })
            if (label, a, k) == points[0]:
                base[i] = (r.latency_ns, r.energy_pj, throughput)
            b_lat, b_en, b_tp = base[i]
            row["rel_latency"] = r.latency_ns / b_lat
            row["rel_energy"] = r.energy_pj / b_en
            row["rel_throughput"] = throughput / b_tp
            rows.append(row)
    return rows


def geomean(values) -> float:
    vals = list(values)
    if not vals:
        raise ValueError("geomean of empty sequence")
    return math.exp(sum(math.log(v) for v in vals) / len(vals))
