"""Search for the least-latency, then least-energy mapping of a layer.

The objective is strictly lexicographic: latency first, energy among
latency ties, canonical encoding as the final tie-break so reruns return
the identical mapping.  Search is exhaustive below the factorization
threshold; above it a seeded sample plus corner candidates is refined by
greedy single-prime-factor moves, permutation swaps and bypass toggles.
Results are cached on disk keyed by a content hash of the inputs.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import os
import tempfile
from pathlib import Path

from . import __version__
from .arch import ArchSpec, dump_arch
from .cost import CostResult, evaluate
from .mapping import (DIMS, Mapping, MapspaceLimits, MapspaceStream,
                      PERM_TEMPLATES, _prime_powers, canonical_perm,
                      corner_mappings, encode_mapping, make_mapping,
                      parse_mapping, validate)
from .workload import LayerShape

MAX_REFINE_MOVES = 1000

#: how many leading candidates are polished by local search
REFINE_STARTS = 3

CACHE_ENV = "PARACOST_CACHE_DIR"


class EmptyMapspaceError(RuntimeError):
    """No valid mapping exists for the layer on this architecture."""


def batch_variant(layer: LayerShape, k: int) -> LayerShape:
    """The same layer processing k inputs together."""
    return layer.batched(k)


def _key(mapping: Mapping, result: CostResult) -> tuple:
    return (result.latency_ns, result.energy_pj, encode_mapping(mapping))


def _neighbours(mapping: Mapping, arch: ArchSpec):
    """Single-step perturbations, in a fixed deterministic order."""
    levels = mapping.num_levels
    slots = 2 * levels - 1  # t0, s0, t1, s1, ..., t_last

    def slot_get(m: Mapping, slot: int, dim: str) -> int:
        return m.t(slot // 2, dim) if slot % 2 == 0 else m.s(slot // 2, dim)

    def rebuild(m: Mapping, dim: str, src: int, dst: int, p: int) -> Mapping | None:
        temporal = [dict(zip(DIMS, row)) for row in m.temporal]
        spatial = [dict(zip(DIMS, row)) for row in m.spatial]
        def table(slot):
            return temporal[slot // 2] if slot % 2 == 0 else spatial[slot // 2]
        if table(src).get(dim, 1) % p:
            return None
        table(src)[dim] = table(src).get(dim, 1) // p
        table(dst)[dim] = table(dst).get(dim, 1) * p
        perms = []
        for l in range(levels):
            active = {d for d in DIMS if temporal[l].get(d, 1) > 1}
            old = tuple(d for d in m.perms[l] if d in active)
            extra = tuple(d for d in canonical_perm(temporal[l]) if d not in old)
            perms.append(old + extra)
        return make_mapping(arch, temporal, spatial, perms,
                            {i: set(b) for i, b in enumerate(m.bypass)})

    for dim in DIMS:
        for src in range(slots):
            v = slot_get(mapping, src, dim)
            if v <= 1:
                continue
            primes = [p for p, _ in _prime_powers(v)]
            for p in primes:
                for dst in range(slots):
                    if dst == src:
                        continue
                    m2 = rebuild(mapping, dim, src, dst, p)
                    if m2 is not None:
                        yield m2

    for l in range(levels):
        for tpl in PERM_TEMPLATES:
            newperm = canonical_perm(dict(zip(DIMS, mapping.temporal[l])), tpl)
            if newperm != mapping.perms[l]:
                perms = list(mapping.perms)
                perms[l] = newperm
                yield Mapping(mapping.temporal, mapping.spatial, tuple(perms), mapping.bypass)

    if levels > 2:
        gb = arch.buffer_levels[0]
        for o in sorted(arch.levels[gb].bypassable):
            ops = set(mapping.bypass[gb])
            ops.symmetric_difference_update({o})
            bypass = tuple(frozenset(ops) if i == gb else b
                           for i, b in enumerate(mapping.bypass))
            yield Mapping(mapping.temporal, mapping.spatial, mapping.perms, bypass)


def _refine(mapping: Mapping, result: CostResult, layer: LayerShape,
            arch: ArchSpec) -> tuple[Mapping, CostResult]:
    best, best_r = mapping, result
    moves = 0
    improved = True
    while improved and moves < MAX_REFINE_MOVES:
        improved = False
        cand_best, cand_r = None, None
        for m2 in _neighbours(best, arch):
            if validate(m2, layer, arch):
                continue
            r2 = evaluate(m2, layer, arch)
            if cand_best is None or _key(m2, r2) < _key(cand_best, cand_r):
                cand_best, cand_r = m2, r2
        if cand_best is not None and _key(cand_best, cand_r) < _key(best, best_r):
            best, best_r = cand_best, cand_r
            moves += 1
            improved = True
    return best, best_r


# ---------------------------------------------------------------------------
# disk cache

def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "paracost"


def _cache_key(layer: LayerShape, arch: ArchSpec, limits: MapspaceLimits) -> str:
    blob = "|".join([
        __version__, repr(layer), dump_arch(arch),
        f"{limits.max_candidates},{limits.random_seed},{limits.exhaustive_threshold}",
    ])
    return hashlib.sha256(blob.encode()).hexdigest()


def _cache_load(key: str) -> tuple[Mapping, CostResult] | None:
    path = cache_dir() / f"{key}.json"
    try:
        doc = json.loads(path.read_text("utf-8"))
        mapping = parse_mapping(doc["mapping"])
        result = CostResult(
            latency_ns=doc["latency_ns"], bottleneck=doc["bottleneck"],
            energy_pj=doc["energy_pj"], breakdown=doc["breakdown"],
            utilization=doc["utilization"], active_macs=doc["active_macs"],
            compute_ns=doc["compute_ns"],
        )
        return mapping, result
    except (OSError, KeyError, ValueError):
        return None


def _cache_store(key: str, mapping: Mapping, result: CostResult):
    d = cache_dir()
    try:
        d.mkdir(parents=True, exist_ok=True)
        doc = {
            "mapping": encode_mapping(mapping),
            "latency_ns": result.latency_ns, "bottleneck": result.bottleneck,
            "energy_pj": result.energy_pj, "breakdown": result.breakdown,
            "utilization": result.utilization, "active_macs": result.active_macs,
            "compute_ns": result.compute_ns,
        }
        fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        os.replace(tmp, d / f"{key}.json")  # atomic publish
    except OSError:
        pass


# ---------------------------------------------------------------------------

def optimize(layer: LayerShape, arch: ArchSpec,
             limits: MapspaceLimits = MapspaceLimits(),
             use_cache: bool = True) -> tuple[Mapping, CostResult]:
    """Best mapping under the lexicographic (latency, energy) objective.

    Deterministic for equal inputs; raises EmptyMapspaceError when no
    valid mapping exists.
    """
    key = _cache_key(layer, arch, limits)
    if use_cache:
        hit = _cache_load(key)
        if hit is not None:
            return hit

    stream = MapspaceStream(layer, arch, limits)
    top: list[tuple[tuple, Mapping, CostResult]] = []
    for m in itertools.chain(stream, corner_mappings(layer, arch)):
        r = evaluate(m, layer, arch)
        top.append((_key(m, r), m, r))
        top.sort(key=lambda t: t[0])
        del top[REFINE_STARTS:]
    if not top:
        raise EmptyMapspaceError(
            f"no valid mapping for layer {layer.name!r} on {arch.name!r}")

    best, best_r = None, None
    for _, m, r in top:
        m2, r2 = _refine(m, r, layer, arch)
        if best is None or _key(m2, r2) < _key(best, best_r):
            best, best_r = m2, r2

    if use_cache:
        _cache_store(key, best, best_r)
    return best, best_r
