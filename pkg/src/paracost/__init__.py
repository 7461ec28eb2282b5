"""Analytical latency/energy model and mapping search for DNN accelerator
paradigms (conventional ASIC, near-data, in-memory)."""

__version__ = "0.1.0"

from .arch import ArchSpec, Fanout, MacSpec, MemoryLevel, load_arch, dump_arch, preset, scale, split_buffer
from .cost import AccessProfile, CostResult, analyze_reuse, evaluate
from .mapping import (Mapping, MapspaceLimits, MapspaceStream, encode_mapping,
                      enumerate_mapspace, parse_mapping, tile_footprint, validate)
from .oracle import reference_layer, simulate_accesses
from .workload import LayerShape, LayerMetrics, derive_metrics, load_workload, output_dims, parse_workload

__all__ = [
    "ArchSpec", "Fanout", "MacSpec", "MemoryLevel", "load_arch", "dump_arch",
    "preset", "scale", "split_buffer",
    "AccessProfile", "CostResult", "analyze_reuse", "evaluate",
    "Mapping", "MapspaceLimits", "MapspaceStream", "encode_mapping",
    "enumerate_mapspace", "parse_mapping", "tile_footprint", "validate",
    "reference_layer", "simulate_accesses",
    "LayerShape", "LayerMetrics", "derive_metrics", "load_workload",
    "output_dims", "parse_workload",
]
